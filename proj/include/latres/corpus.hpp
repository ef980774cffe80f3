#pragma once

// Speech-like synthetic material: voiced segments (harmonic complexes with
// pitch drift), unvoiced segments (shaped noise) and near-silence, laid out on
// 10 ms frame boundaries with a per-frame segment class.

#include <cstdint>
#include <vector>

#include "latres/common.hpp"

namespace latres {

struct CorpusParams {
  double seconds = 60.0;
  std::uint64_t seed = 1;
  double voiced_fraction = 0.55;
  double unvoiced_fraction = 0.15;
  double silence_fraction = 0.30;
  double f0_min_hz = 95.0;
  double f0_max_hz = 105.0;
  double max_pitch_drift = 0.03;  // relative change of f0 across a segment
  double phase_spread = 0.0;      // harmonic start phases drawn from [0, spread * 2pi)
  double tilt_min = 0.8;          // harmonic h weighted 1/h^tilt
  double tilt_max = 1.4;
};

struct Corpus {
  Vec samples;
  std::vector<VoicingClass> segment_class;  // per frame, as generated
  std::vector<VoicingClass> labels;         // per frame, energy/ZCR rule
};

Corpus generate_corpus(const CorpusParams& params);

}  // namespace latres
