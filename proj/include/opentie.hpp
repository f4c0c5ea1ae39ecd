#pragma once

#include "opentie/cloud_filter.hpp"
#include "opentie/config.hpp"
#include "opentie/error.hpp"
#include "opentie/frames.hpp"
#include "opentie/geometry.hpp"
#include "opentie/image.hpp"
#include "opentie/key_value.hpp"
#include "opentie/mask.hpp"
#include "opentie/metrics.hpp"
#include "opentie/node_locate.hpp"
#include "opentie/pipeline.hpp"
#include "opentie/plane_detect.hpp"
#include "opentie/point_cloud.hpp"
#include "opentie/robot_link.hpp"
#include "opentie/scene_spec.hpp"
#include "opentie/scene_synth.hpp"
#include "opentie/stereo.hpp"
