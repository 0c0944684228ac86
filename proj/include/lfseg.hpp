#pragma once

#include "lfseg/camera.hpp"
#include "lfseg/config.hpp"
#include "lfseg/detection.hpp"
#include "lfseg/error.hpp"
#include "lfseg/evaluation.hpp"
#include "lfseg/fixtures.hpp"
#include "lfseg/fusion.hpp"
#include "lfseg/grid.hpp"
#include "lfseg/hash.hpp"
#include "lfseg/kdtree.hpp"
#include "lfseg/label_set.hpp"
#include "lfseg/parallel.hpp"
#include "lfseg/partial_cloud.hpp"
#include "lfseg/pipeline.hpp"
#include "lfseg/ply.hpp"
#include "lfseg/png.hpp"
#include "lfseg/point_cloud.hpp"
#include "lfseg/refinement.hpp"
#include "lfseg/renderer.hpp"
#include "lfseg/rng.hpp"
#include "lfseg/segmenter.hpp"
#include "lfseg/stages.hpp"
#include "lfseg/synth.hpp"
#include "lfseg/trajectory.hpp"
