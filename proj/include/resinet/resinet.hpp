#pragma once

#include "resinet/bench.hpp"
#include "resinet/cegar.hpp"
#include "resinet/gen.hpp"
#include "resinet/oracle.hpp"
#include "resinet/validate.hpp"
