#pragma once

// Umbrella header.
#include "cmcs/categories.hpp"
#include "cmcs/collusion.hpp"
#include "cmcs/common.hpp"
#include "cmcs/cookie_sim.hpp"
#include "cmcs/js_frontend.hpp"
#include "cmcs/package.hpp"
#include "cmcs/pipeline.hpp"
#include "cmcs/public_suffix.hpp"
#include "cmcs/report.hpp"
#include "cmcs/state_model.hpp"
#include "cmcs/taint_catalog.hpp"
#include "cmcs/taint_engine.hpp"
#include "cmcs/url_resolver.hpp"
#include "cmcs/wxml.hpp"
