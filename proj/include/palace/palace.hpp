// Umbrella header.

#pragma once

#include "palace/certify.hpp"
#include "palace/cover.hpp"
#include "palace/cv.hpp"
#include "palace/diagram.hpp"
#include "palace/embed.hpp"
#include "palace/experiment.hpp"
#include "palace/io.hpp"
#include "palace/kernel.hpp"
#include "palace/landmarks.hpp"
#include "palace/matching.hpp"
#include "palace/numeric.hpp"
#include "palace/random.hpp"
#include "palace/rips.hpp"
#include "palace/select.hpp"
#include "palace/svm.hpp"

namespace palace {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace palace
