// Command-line front end: run / baseline / predict / ldpc-test / detect.

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "fedcomm/fedcomm.hpp"

namespace {

using namespace fedcomm;

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

void print_report(const DeliveryReport& r) {
  std::printf("frame_bits=%zu\n", r.frame_bits);
  std::printf("t_predicted=%.4f\n", r.t_predicted);
  if (r.delivered)
    std::printf("delivered=1 t_observed=%zu\n", r.t_observed);
  else
    std::printf("delivered=0\n");
  if (!std::isnan(r.accuracy_gap)) std::printf("accuracy_gap=%.6f\n", r.accuracy_gap);
  if (r.false_accepts) std::printf("false_accepts=%zu\n", r.false_accepts);
}

struct RunOptions {
  std::string config;
  std::string log = "rounds.csv";
  std::string eve_report;
  std::string trace_out;
  std::string payload_out = "decoded_payload.bin";
  bool compare = false;
};

int cmd_run(const RunOptions& o) {
  const auto cfg = load_config(o.config);
  auto result = run_experiment(cfg);
  if (o.compare) {
    const auto base = run_baseline(cfg);
    result.report.accuracy_gap = accuracy_gap(result.records, base.records);
  }
  write_round_log(result.records, o.log);
  if (!o.eve_report.empty()) {
    if (!cfg.eve_logging) std::cerr << "warning: eve_logging is off, the eve report has no rows\n";
    std::ofstream f(o.eve_report);
    if (!f) throw std::runtime_error("cannot write eve report: " + o.eve_report);
    write_eve_report(result.eve, f);
  }
  if (!o.trace_out.empty()) result.trace.save(o.trace_out);
  print_report(result.report);
  if (result.report.decoded) {
    std::ofstream f(o.payload_out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write payload: " + o.payload_out);
    const auto& bytes = result.report.decoded->bytes;
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    std::printf("payload_sha256=%s\n", sha256_hex(bytes).c_str());
    std::printf("payload_file=%s\n", o.payload_out.c_str());
  }
  std::size_t g = 0;
  for (const auto& [index, grp] : cfg.groups) {
    const auto& rep = result.group_reports.at(g++);
    std::printf("group%zu delivered=%d", index, rep.delivered ? 1 : 0);
    if (rep.delivered) std::printf(" t_observed=%zu payload_sha256=%s", rep.t_observed, sha256_hex(rep.decoded->bytes).c_str());
    std::printf(" t_predicted=%.4f\n", rep.t_predicted);
  }
  return 0;
}

int cmd_baseline(const std::string& config, const std::string& log) {
  const auto cfg = load_config(config);
  const auto result = run_baseline(cfg);
  write_round_log(result.records, log);
  std::printf("rounds=%zu\n", result.records.size());
  if (!result.records.empty() && !std::isnan(result.records.back().accuracy))
    std::printf("final_accuracy=%.6f\n", result.records.back().accuracy);
  return 0;
}

int cmd_predict(double n, double p, double r, double delta, double m, double sigma, double t) {
  const auto pred = predict(n, p, r, delta, m, sigma, t);
  std::printf("t_min=%.4f\n", pred.t_min);
  std::printf("t_min_rounds=%.0f\n", std::ceil(pred.t_min));
  std::printf("gamma=%.6g\n", pred.gamma);
  std::printf("y_variance(T=%g)=%.6f\n", t, pred.y_variance);
  return 0;
}

int cmd_ldpc_test(std::size_t k, int trials, double noise, Seed seed, int iters) {
  const auto code = construct_code(k, seed);
  auto eng = make_engine(derive_seed(seed, {stream::test_set}));
  std::normal_distribution<double> nd(0.0, noise);
  std::bernoulli_distribution coin(0.5);
  const double var = noise * noise;
  int exact = 0;
  std::size_t raw_errors = 0;
  for (int t = 0; t < trials; ++t) {
    Bits m(k);
    for (auto& b : m) b = coin(eng);
    const auto cw = encode(code, m);
    LlrVector llr(cw.size());
    for (std::size_t i = 0; i < cw.size(); ++i) {
      const double y = (cw[i] ? -1.0 : 1.0) + nd(eng);
      raw_errors += ((y < 0.0) != (cw[i] == 1)) ? 1 : 0;
      llr[i] = 2.0 * y / var;
    }
    const auto r = bp_decode(code, llr, iters);
    exact += (r.converged && r.message == m) ? 1 : 0;
  }
  std::printf("k=%zu n=%zu trials=%d noise=%g\n", k, code.n(), trials, noise);
  std::printf("raw_ber=%.6f\n", static_cast<double>(raw_errors) / (static_cast<double>(trials) * code.n()));
  std::printf("exact_decodes=%d success_rate=%.4f\n", exact, static_cast<double>(exact) / trials);
  return 0;
}

int cmd_detect(const std::string& log, double alpha) {
  const auto records = read_round_log(log);
  std::size_t ks_rounds = 0, ks_reject = 0, z_rounds = 0, z_flag = 0;
  double max_z = 0.0;
  std::size_t first_delivered = 0;
  for (const auto& r : records) {
    if (!std::isnan(r.ks_p)) {
      ++ks_rounds;
      ks_reject += r.ks_p < alpha ? 1 : 0;
    }
    if (!std::isnan(r.sender_norm) && r.cohort_norm_std > 0.0) {
      const double z = (r.sender_norm - r.cohort_norm_mean) / r.cohort_norm_std;
      ++z_rounds;
      z_flag += std::fabs(z) > 3.0 ? 1 : 0;
      max_z = std::max(max_z, std::fabs(z));
    }
    if (r.delivered && first_delivered == 0) first_delivered = r.round;
  }
  std::printf("rounds=%zu\n", records.size());
  std::printf("ks_rounds=%zu ks_rejections(p<%g)=%zu\n", ks_rounds, alpha, ks_reject);
  std::printf("norm_rounds=%zu norm_flags(|z|>3)=%zu max_abs_z=%.4f\n", z_rounds, z_flag, max_z);
  if (first_delivered) std::printf("delivered_round=%zu\n", first_delivered);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covert payload transport over federated-learning updates"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("config", run_opts.config, "key = value config file")->required();
  run->add_option("--log", run_opts.log, "Round log CSV output");
  run->add_option("--eve-report", run_opts.eve_report, "Per-participant observer report CSV");
  run->add_option("--trace-out", run_opts.trace_out, "Write the per-update std trace CSV");
  run->add_option("--payload-out", run_opts.payload_out, "Where to write the decoded payload");
  run->add_flag("--compare-baseline", run_opts.compare, "Also run the baseline and report the accuracy gap");

  std::string base_config, base_log = "baseline_rounds.csv";
  auto* baseline = app.add_subcommand("baseline", "Run the config with embedding disabled");
  baseline->add_option("config", base_config, "key = value config file")->required();
  baseline->add_option("--log", base_log, "Round log CSV output");

  double pn = 0, pp = 0, pr = 0, pdelta = 1, pm = 1, psigma = 1, pt = 1;
  auto* pred = app.add_subcommand("predict", "Delivery-time bound and correlator variance");
  pred->add_option("--n", pn, "Participants")->required();
  pred->add_option("--p", pp, "Frame bits (coded payload plus pilots)")->required();
  pred->add_option("--r", pr, "Carrier count")->required();
  pred->add_option("--delta", pdelta, "Stealth parameter in (0, 1]")->required();
  pred->add_option("--m", pm, "Coherent senders")->required();
  pred->add_option("--sigma", psigma, "Update standard deviation");
  pred->add_option("--t", pt, "Rounds for the variance figure");

  std::size_t lk = 96;
  int ltrials = 200, liters = kDefaultBpIterations;
  double lnoise = 0.4868;
  Seed lseed = 1;
  auto* ldpc = app.add_subcommand("ldpc-test", "Monte Carlo BP decoding over a Gaussian channel");
  ldpc->add_option("--k", lk, "Message bits");
  ldpc->add_option("--trials", ltrials, "Trials");
  ldpc->add_option("--noise", lnoise, "Noise standard deviation on +-1 chips");
  ldpc->add_option("--seed", lseed, "Code and channel seed");
  ldpc->add_option("--iters", liters, "BP iteration cap");

  std::string dlog;
  double dalpha = 0.01;
  auto* detect = app.add_subcommand("detect", "Summarize observer statistics of a round log");
  detect->add_option("round-log", dlog, "Round log CSV")->required();
  detect->add_option("--alpha", dalpha, "KS significance level");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts);
    if (*baseline) return cmd_baseline(base_config, base_log);
    if (*pred) return cmd_predict(pn, pp, pr, pdelta, pm, psigma, pt);
    if (*ldpc) return cmd_ldpc_test(lk, ltrials, lnoise, lseed, liters);
    if (*detect) return cmd_detect(dlog, dalpha);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
