#pragma once

// mmWave location-assisted beam alignment: umbrella header.

#include "locbeam/arrays.hpp"
#include "locbeam/channel.hpp"
#include "locbeam/locbf.hpp"
#include "locbeam/metrics.hpp"
#include "locbeam/omp.hpp"
#include "locbeam/rng.hpp"
#include "locbeam/scenario.hpp"
#include "locbeam/sensing.hpp"
