#pragma once

#include <cstdint>
#include <filesystem>

namespace lexpsy::study {

struct StudyOptions {
  int agents = 300;
  double noise_sd = 1.0;
  std::uint64_t seed = 1;
  int pir_items_per_dimension = 10;
  int embedding_dim = 16;
};

/// Writes a self-contained synthetic study into dir: census, occupations,
/// trait panel, adjective and questionnaire keys, lexicon, antonym pairs,
/// reference loadings, word vectors and config.json for the synthetic backend.
///
/// Dimensions H..C get 40 weakly keyed adjectives each and O gets 10 strongly
/// keyed ones, so the six-factor solution is the most reliable one.
void write_study(const std::filesystem::path& dir, const StudyOptions& options = {});

}  // namespace lexpsy::study
