#pragma once

#include "dollarb/core.hpp"
#include "dollarb/dataset_io.hpp"
#include "dollarb/dsp.hpp"
#include "dollarb/eval.hpp"
#include "dollarb/linalg.hpp"
#include "dollarb/random.hpp"
#include "dollarb/recognizer.hpp"
#include "dollarb/segmentation.hpp"
#include "dollarb/synthgen.hpp"
#include "dollarb/template_store.hpp"
