#pragma once

#include "gabdiv/divergence.hpp"
#include "gabdiv/entropy.hpp"
#include "gabdiv/error.hpp"
#include "gabdiv/io.hpp"
#include "gabdiv/maxent.hpp"
#include "gabdiv/measures.hpp"
#include "gabdiv/properties.hpp"
#include "gabdiv/psi.hpp"
#include "gabdiv/psi_spec.hpp"
#include "gabdiv/random.hpp"
#include "gabdiv/validity.hpp"
