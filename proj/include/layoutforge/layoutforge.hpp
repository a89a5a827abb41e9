#pragma once

#include "autodiff.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "generate.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "layout.hpp"
#include "model.hpp"
#include "optimizer.hpp"
#include "oracle.hpp"
#include "penalties.hpp"
#include "random.hpp"
#include "tasks.hpp"
#include "templates.hpp"
#include "train.hpp"
