#pragma once

#include "amdp/adversary.hpp"
#include "amdp/confidence.hpp"
#include "amdp/fpl.hpp"
#include "amdp/fpop.hpp"
#include "amdp/mdp.hpp"
#include "amdp/oracle.hpp"
#include "amdp/perturbation.hpp"
#include "amdp/rng.hpp"
