#pragma once

#include "cifra/chord_parser.hpp"

namespace cifra {

// Circle-of-fifths relabeling of the chromatic cycle: position of pitch
// class p is (7*p) mod 12, so C=0, G=1, D=2, ... F=11.
struct CircleOfFifths {
  static int position(const PitchClass& pc) { return (7 * pc.index) % 12; }
};

// Minimal number of circle-of-fifths steps between two pitch classes.
// Symmetric, range 0..6.
int fifthsDistance(const PitchClass& a, const PitchClass& b);

// Circular chromatic distance min(d, 12-d). Symmetric, range 0..6.
int semitoneDistance(const PitchClass& a, const PitchClass& b);

}  // namespace cifra
