#pragma once

#include "marcus/rng.hpp"
#include "marcus/ode.hpp"
#include "marcus/coefficients.hpp"
#include "marcus/levy.hpp"
#include "marcus/marcus_flow.hpp"
#include "marcus/integrators.hpp"
#include "marcus/test_functions.hpp"
#include "marcus/generators.hpp"
#include "marcus/montecarlo.hpp"
#include "marcus/config.hpp"
#include "marcus/commands.hpp"
