#pragma once

#include "tuma/channel.hpp"
#include "tuma/codebooks.hpp"
#include "tuma/decoders.hpp"
#include "tuma/denoiser.hpp"
#include "tuma/harness.hpp"
#include "tuma/metrics.hpp"
#include "tuma/rng.hpp"
#include "tuma/scenario.hpp"
#include "tuma/transport.hpp"
#include "tuma/types.hpp"
