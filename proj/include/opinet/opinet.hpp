#ifndef OPINET_OPINET_HPP
#define OPINET_OPINET_HPP

#include "opinet/errors.hpp"
#include "opinet/core_model.hpp"
#include "opinet/matrix_io.hpp"
#include "opinet/access_logic.hpp"
#include "opinet/scc_analysis.hpp"
#include "opinet/dynamics.hpp"
#include "opinet/scheduler.hpp"
#include "opinet/detection.hpp"
#include "opinet/scenario.hpp"
#include "opinet/commands.hpp"

#endif  // OPINET_OPINET_HPP
