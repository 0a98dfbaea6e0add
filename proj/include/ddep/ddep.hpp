#pragma once

#include "ddep/config.hpp"
#include "ddep/engine.hpp"
#include "ddep/equilibrium.hpp"
#include "ddep/errors.hpp"
#include "ddep/estimation.hpp"
#include "ddep/experiment.hpp"
#include "ddep/io.hpp"
#include "ddep/market.hpp"
#include "ddep/metrics.hpp"
#include "ddep/rng.hpp"
