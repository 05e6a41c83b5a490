#ifndef NOMA_PA_NOMA_PA_HPP
#define NOMA_PA_NOMA_PA_HPP

// Core library. scenario.hpp and report.hpp additionally need nlohmann/json.

#include "noma_pa/allocation.hpp"
#include "noma_pa/channel.hpp"
#include "noma_pa/config.hpp"
#include "noma_pa/error.hpp"
#include "noma_pa/ordering.hpp"
#include "noma_pa/outage.hpp"
#include "noma_pa/philox.hpp"

#endif  // NOMA_PA_NOMA_PA_HPP
