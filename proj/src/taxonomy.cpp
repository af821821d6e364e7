#include <stdexcept>

#include "segrl/env.hpp"

namespace segrl {

std::string to_string(Exploration e) { return e == Exploration::kEasy ? "easy" : "hard"; }

std::string to_string(RewardClass r) {
  switch (r) {
    case RewardClass::kHumanOptimal: return "human-optimal";
    case RewardClass::kScoreExploit: return "score-exploit";
    case RewardClass::kDense: return "dense";
    case RewardClass::kSparse: return "sparse";
  }
  return "?";
}

std::string to_string(ObjectCount o) { return o == ObjectCount::kLow ? "low" : "high"; }

const std::vector<TaxonomyEntry>& atari_taxonomy() {
  using E = Exploration;
  using R = RewardClass;
  using O = ObjectCount;
  static const std::vector<TaxonomyEntry> kEntries{
      {"Breakout", E::kEasy, R::kHumanOptimal, O::kLow},
      {"Pong", E::kEasy, R::kHumanOptimal, O::kLow},
      {"Space Invaders", E::kEasy, R::kHumanOptimal, O::kHigh},
      {"Chopper Command", E::kEasy, R::kHumanOptimal, O::kHigh},
      {"Kung Fu Master", E::kEasy, R::kScoreExploit, O::kLow},
      {"Road Runner", E::kEasy, R::kScoreExploit, O::kLow},
      {"Seaquest", E::kEasy, R::kScoreExploit, O::kHigh},
      {"Beam Rider", E::kEasy, R::kScoreExploit, O::kHigh},
      {"Ms. Pac-Man", E::kHard, R::kDense, O::kLow},
      {"Q*Bert", E::kHard, R::kDense, O::kLow},
      {"Frostbite", E::kHard, R::kDense, O::kHigh},
      {"Zaxxon", E::kHard, R::kDense, O::kHigh},
  };
  return kEntries;
}

const std::vector<TaxonomyEntry>& native_taxonomy() {
  using E = Exploration;
  using R = RewardClass;
  using O = ObjectCount;
  static const std::vector<TaxonomyEntry> kEntries{
      {"MiniCatch-v0", E::kEasy, R::kHumanOptimal, O::kLow},
      {"MiniCatch8-v0", E::kEasy, R::kHumanOptimal, O::kHigh},
      {"MiniBricks-v0", E::kEasy, R::kHumanOptimal, O::kLow},
  };
  return kEntries;
}

const TaxonomyEntry& taxonomy_lookup(std::string_view game_id) {
  for (const auto* table : {&atari_taxonomy(), &native_taxonomy()}) {
    for (const auto& e : *table) {
      if (e.game_id == game_id) return e;
    }
  }
  throw std::invalid_argument("no taxonomy entry for '" + std::string(game_id) + "'");
}

}  // namespace segrl
