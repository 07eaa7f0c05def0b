#pragma once

#include "mising/arith.hpp"
#include "mising/error.hpp"
#include "mising/format.hpp"
#include "mising/gibbs.hpp"
#include "mising/ising1d.hpp"
#include "mising/ldp.hpp"
#include "mising/multiprime.hpp"
#include "mising/observable.hpp"
#include "mising/observable_parser.hpp"
#include "mising/sample_io.hpp"
