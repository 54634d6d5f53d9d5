#pragma once

#include "lstsc/audio.hpp"
#include "lstsc/coherence.hpp"
#include "lstsc/enhancer.hpp"
#include "lstsc/erb.hpp"
#include "lstsc/error.hpp"
#include "lstsc/feature_io.hpp"
#include "lstsc/metrics.hpp"
#include "lstsc/room.hpp"
#include "lstsc/stft.hpp"
#include "lstsc/synth.hpp"
