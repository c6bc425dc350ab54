#pragma once

// Fluorescence grid based aggregation of gene-protein chemical master
// equations: phase model, generator assembly, aggregation operators,
// solvers, stochastic simulation and the aggregation error harness.

#include "fgba/aggregation.hpp"
#include "fgba/cme_builder.hpp"
#include "fgba/error_bound.hpp"
#include "fgba/errors.hpp"
#include "fgba/experiment.hpp"
#include "fgba/grid.hpp"
#include "fgba/io.hpp"
#include "fgba/phase_model.hpp"
#include "fgba/rng.hpp"
#include "fgba/solver.hpp"
#include "fgba/sparse.hpp"
#include "fgba/ssa.hpp"
#include "fgba/state_space.hpp"
