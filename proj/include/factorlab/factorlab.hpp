#pragma once

#include "corpus.hpp"
#include "errors.hpp"
#include "fit.hpp"
#include "fitters.hpp"
#include "games.hpp"
#include "io.hpp"
#include "isotonic.hpp"
#include "mrvf.hpp"
#include "payoff.hpp"
#include "policy.hpp"
#include "predator_prey.hpp"
#include "qplex.hpp"
#include "stability.hpp"
