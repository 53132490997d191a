#pragma once

#include "wulff/config.hpp"
#include "wulff/error.hpp"
#include "wulff/gibbs.hpp"
#include "wulff/grid.hpp"
#include "wulff/isoperimetry.hpp"
#include "wulff/lattice.hpp"
#include "wulff/mcmc.hpp"
#include "wulff/oracle.hpp"
#include "wulff/resistance.hpp"
#include "wulff/rng.hpp"
#include "wulff/scaling.hpp"
#include "wulff/site.hpp"
#include "wulff/stats.hpp"
#include "wulff/tilted.hpp"
#include "wulff/tilted_experiments.hpp"
