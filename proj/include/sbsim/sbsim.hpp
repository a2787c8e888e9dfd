#pragma once

#include "sbsim/constants.hpp"
#include "sbsim/dynamics.hpp"
#include "sbsim/environment.hpp"
#include "sbsim/errors.hpp"
#include "sbsim/fidelity.hpp"
#include "sbsim/oracle.hpp"
#include "sbsim/rng.hpp"
#include "sbsim/runner/config.hpp"
#include "sbsim/runner/csv.hpp"
#include "sbsim/runner/scenarios.hpp"
#include "sbsim/runner/self_check.hpp"
#include "sbsim/vector3.hpp"
#include "sbsim/version.hpp"
