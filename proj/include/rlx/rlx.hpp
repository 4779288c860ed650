#pragma once

#include "rlx/errors.hpp"
#include "rlx/moebius.hpp"
#include "rlx/schottky.hpp"
#include "rlx/autmeasure.hpp"
#include "rlx/herglotz.hpp"
#include "rlx/finitegap.hpp"
#include "rlx/io.hpp"
