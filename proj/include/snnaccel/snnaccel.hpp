// snnaccel.hpp - umbrella header.
#pragma once

#include "blob_io.hpp"
#include "calibrate.hpp"
#include "decompose.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "fixed_point.hpp"
#include "fixtures.hpp"
#include "manifest.hpp"
#include "model_ir.hpp"
#include "oracle.hpp"
#include "pipeline.hpp"
#include "plane_order.hpp"
#include "postproc.hpp"
#include "schedperf.hpp"
#include "tensor.hpp"
