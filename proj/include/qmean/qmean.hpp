#pragma once

#include "qmean/actions.hpp"
#include "qmean/bias.hpp"
#include "qmean/core.hpp"
#include "qmean/experiments.hpp"
#include "qmean/io.hpp"
#include "qmean/maxmax.hpp"
#include "qmean/model.hpp"
#include "qmean/noninvariant.hpp"
#include "qmean/quotient.hpp"
#include "qmean/rng.hpp"
