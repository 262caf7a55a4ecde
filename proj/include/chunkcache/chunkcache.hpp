#pragma once

#include "chunkcache/catalog.hpp"
#include "chunkcache/che.hpp"
#include "chunkcache/experiment.hpp"
#include "chunkcache/numeric.hpp"
#include "chunkcache/retention.hpp"
#include "chunkcache/rng.hpp"
#include "chunkcache/simulator.hpp"
#include "chunkcache/static_opt.hpp"
