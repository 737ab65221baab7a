#pragma once

// Umbrella header: discrete-time route-and-departure-time user equilibrium
// with elastic demand, solved as a variational inequality over the product
// of the path-flow space and the OD demand space.

#include "edue/core.hpp"
#include "edue/time_grid.hpp"
#include "edue/network.hpp"
#include "edue/hilbert.hpp"
#include "edue/ltm.hpp"
#include "edue/projection.hpp"
#include "edue/solvers.hpp"
#include "edue/diagnostics.hpp"
#include "edue/scenario_io.hpp"
#include "edue/run.hpp"
