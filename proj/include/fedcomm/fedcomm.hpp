#pragma once

#include "fedcomm/cdma_channel.hpp"
#include "fedcomm/detection.hpp"
#include "fedcomm/experiment.hpp"
#include "fedcomm/fl_sim.hpp"
#include "fedcomm/gf2.hpp"
#include "fedcomm/ldpc_codec.hpp"
#include "fedcomm/nn_model.hpp"
#include "fedcomm/payload_framing.hpp"
#include "fedcomm/rng.hpp"
