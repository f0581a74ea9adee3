#pragma once

#include "sketchgen/datasets.hpp"
#include "sketchgen/errors.hpp"
#include "sketchgen/generator.hpp"
#include "sketchgen/io.hpp"
#include "sketchgen/kernel.hpp"
#include "sketchgen/rng.hpp"
#include "sketchgen/sketch.hpp"
#include "sketchgen/trainer.hpp"
