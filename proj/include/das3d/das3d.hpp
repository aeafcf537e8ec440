#pragma once

#include "das3d/cli.hpp"
#include "das3d/depth_synth.hpp"
#include "das3d/error.hpp"
#include "das3d/evaluate.hpp"
#include "das3d/image.hpp"
#include "das3d/io.hpp"
#include "das3d/metrics.hpp"
#include "das3d/noise.hpp"
#include "das3d/pipeline.hpp"
#include "das3d/preprocess.hpp"
#include "das3d/rgb_synth.hpp"
#include "das3d/rng.hpp"
#include "das3d/skew_filter.hpp"
#include "das3d/toy_scene.hpp"
