#pragma once

// Umbrella header for the whole library.

#include "covest/bench.hpp"
#include "covest/distributions.hpp"
#include "covest/error.hpp"
#include "covest/matrix.hpp"
#include "covest/mom.hpp"
#include "covest/oracle.hpp"
#include "covest/random.hpp"
#include "covest/samples.hpp"
#include "covest/tournament.hpp"
