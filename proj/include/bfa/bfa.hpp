#pragma once

#include "bfa/benchmark.hpp"
#include "bfa/bitstring.hpp"
#include "bfa/calibrate.hpp"
#include "bfa/complexity.hpp"
#include "bfa/counts.hpp"
#include "bfa/errors.hpp"
#include "bfa/example_models.hpp"
#include "bfa/io.hpp"
#include "bfa/metrics.hpp"
#include "bfa/mitigate.hpp"
#include "bfa/models.hpp"
#include "bfa/rng.hpp"
#include "bfa/simulate.hpp"
#include "bfa/wht.hpp"
