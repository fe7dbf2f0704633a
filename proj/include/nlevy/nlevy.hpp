#pragma once

#include "nlevy/errors.hpp"
#include "nlevy/levy_triplets.hpp"
#include "nlevy/sampled_function.hpp"
#include "nlevy/initial_conditions.hpp"
#include "nlevy/generator.hpp"
#include "nlevy/pide_solver.hpp"
#include "nlevy/rng.hpp"
#include "nlevy/levy_sim.hpp"
#include "nlevy/validation.hpp"
#include "nlevy/cli.hpp"
