#pragma once

#include "gpslab/errors.hpp"
#include "gpslab/rng.hpp"
#include "gpslab/core.hpp"
#include "gpslab/words.hpp"
#include "gpslab/series.hpp"
#include "gpslab/measures.hpp"
#include "gpslab/spr.hpp"
#include "gpslab/config.hpp"
#include "gpslab/zoo.hpp"
#include "gpslab/report.hpp"
#include "gpslab/commands.hpp"
