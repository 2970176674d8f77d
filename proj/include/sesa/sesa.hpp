#pragma once

// Umbrella header for the sound-event-recognition toolkit.
// Network-dependent pieces (fetch.hpp) are deliberately excluded; include
// them explicitly where needed.

#include "sesa/audio.hpp"
#include "sesa/binio.hpp"
#include "sesa/classifiers.hpp"
#include "sesa/config.hpp"
#include "sesa/dataset.hpp"
#include "sesa/dsp.hpp"
#include "sesa/errors.hpp"
#include "sesa/eval.hpp"
#include "sesa/feature_io.hpp"
#include "sesa/features.hpp"
#include "sesa/fft.hpp"
#include "sesa/matrix.hpp"
#include "sesa/model_file.hpp"
#include "sesa/pipeline.hpp"
#include "sesa/random.hpp"
#include "sesa/synth.hpp"
#include "sesa/timing.hpp"
#include "sesa/zip.hpp"
