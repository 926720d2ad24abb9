#pragma once

#include "song/core.hpp"
#include "song/random.hpp"
#include "song/stats.hpp"
#include "song/fft.hpp"
#include "song/kvfile.hpp"
#include "song/trace.hpp"
#include "song/characterize.hpp"
#include "song/diurnal.hpp"
#include "song/noise.hpp"
#include "song/generate.hpp"
#include "song/replay.hpp"
