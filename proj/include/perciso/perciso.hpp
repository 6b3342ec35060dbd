#pragma once

#include "perciso/constants.hpp"
#include "perciso/geometry.hpp"
#include "perciso/io.hpp"
#include "perciso/isosolver.hpp"
#include "perciso/lab.hpp"
#include "perciso/lattice.hpp"
#include "perciso/metric.hpp"
#include "perciso/percolation.hpp"
#include "perciso/rng.hpp"
#include "perciso/stats.hpp"
#include "perciso/wulff.hpp"
