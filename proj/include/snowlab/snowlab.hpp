#pragma once

#include "analysis.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "harmonic.hpp"
#include "io.hpp"
#include "lattice.hpp"
#include "operator.hpp"
#include "solver.hpp"
