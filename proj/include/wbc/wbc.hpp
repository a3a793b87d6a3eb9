#pragma once

// Umbrella header: the whole library in one include.

#include <wbc/core.hpp>
#include <wbc/robot_model.hpp>
#include <wbc/kinematics.hpp>
#include <wbc/obstacles.hpp>
#include <wbc/distance.hpp>
#include <wbc/constraints.hpp>
#include <wbc/qp.hpp>
#include <wbc/controller.hpp>
#include <wbc/sim.hpp>
#include <wbc/scenario.hpp>
#include <wbc/trace_io.hpp>
