#pragma once

#include "evinv/config.hpp"
#include "evinv/csv.hpp"
#include "evinv/errors.hpp"
#include "evinv/forward.hpp"
#include "evinv/inversion.hpp"
#include "evinv/kernels.hpp"
#include "evinv/linalg.hpp"
#include "evinv/parallel.hpp"
#include "evinv/presets.hpp"
#include "evinv/problem.hpp"
#include "evinv/propagator.hpp"
#include "evinv/runner.hpp"
#include "evinv/time_grid.hpp"
#include "evinv/volterra.hpp"
