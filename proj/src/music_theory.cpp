#include "cifra/music_theory.hpp"

#include <cstdlib>

namespace cifra {

namespace {

int circularDistance(int a, int b) {
  int d = std::abs(a - b);
  return d <= 12 - d ? d : 12 - d;
}

}  // namespace

int fifthsDistance(const PitchClass& a, const PitchClass& b) {
  return circularDistance(CircleOfFifths::position(a),
                          CircleOfFifths::position(b));
}

int semitoneDistance(const PitchClass& a, const PitchClass& b) {
  return circularDistance(a.index, b.index);
}

}  // namespace cifra
