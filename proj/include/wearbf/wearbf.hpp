#ifndef WEARBF_WEARBF_HPP
#define WEARBF_WEARBF_HPP

#include "wearbf/analysis.hpp"
#include "wearbf/bank.hpp"
#include "wearbf/beamformer.hpp"
#include "wearbf/common.hpp"
#include "wearbf/dataset.hpp"
#include "wearbf/features.hpp"
#include "wearbf/geometry.hpp"
#include "wearbf/noise_model.hpp"
#include "wearbf/rir.hpp"
#include "wearbf/scene.hpp"
#include "wearbf/stft.hpp"
#include "wearbf/wav.hpp"

#endif  // WEARBF_WEARBF_HPP
