#pragma once

// Umbrella header: categorical grids, transiogram estimation and models,
// neighborhood search, sequential simulation, evaluation, synthetic maps.

#include "mcrf/engine.hpp"
#include "mcrf/errors.hpp"
#include "mcrf/evaluation.hpp"
#include "mcrf/grid.hpp"
#include "mcrf/neighborhood.hpp"
#include "mcrf/rng.hpp"
#include "mcrf/synth.hpp"
#include "mcrf/transiogram.hpp"
