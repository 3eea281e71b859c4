#pragma once

#include "twistlab/config.hpp"
#include "twistlab/energy.hpp"
#include "twistlab/error.hpp"
#include "twistlab/euler_lagrange.hpp"
#include "twistlab/grid.hpp"
#include "twistlab/maps.hpp"
#include "twistlab/report.hpp"
#include "twistlab/symmetrise.hpp"
#include "twistlab/taylor.hpp"
#include "twistlab/topology.hpp"
#include "twistlab/torus.hpp"
#include "twistlab/verify.hpp"
