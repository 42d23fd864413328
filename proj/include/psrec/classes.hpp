#pragma once

#include <string>

#include "psrec/errors.hpp"

namespace psrec {

// The four object classes the tree distinguishes. "Bright" vs "faint" splits
// on total counts; "ps" (point source) vs "bkg" (background, including
// extended emission) is the physical distinction the pipeline exists for.
enum class ObjectClass { BrightPs, BrightBkg, FaintPs, FaintBkg };

inline std::string to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::BrightPs: return "bright_ps";
    case ObjectClass::BrightBkg: return "bright_bkg";
    case ObjectClass::FaintPs: return "faint_ps";
    case ObjectClass::FaintBkg: return "faint_bkg";
  }
  throw DomainError("ObjectClass: invalid enumerator");
}

inline ObjectClass object_class_from_string(const std::string& s) {
  if (s == "bright_ps") return ObjectClass::BrightPs;
  if (s == "bright_bkg") return ObjectClass::BrightBkg;
  if (s == "faint_ps") return ObjectClass::FaintPs;
  if (s == "faint_bkg") return ObjectClass::FaintBkg;
  throw ParseError("unknown object class: '" + s + "'");
}

// Two-bit code per class. The first bit separates the bright group from the
// faint group (level 1 of the tree); the second bit is the level-2 label
// within each branch. The keep/discard decision is the XOR of the bits:
//
//   class       label1  label2  decision
//   bright_ps     1       0        1
//   bright_bkg    1       1        0
//   faint_ps      0       1        1
//   faint_bkg     0       0        0
inline int label1_of(ObjectClass c) {
  return (c == ObjectClass::BrightPs || c == ObjectClass::BrightBkg) ? 1 : 0;
}

inline int label2_of(ObjectClass c) {
  return (c == ObjectClass::BrightBkg || c == ObjectClass::FaintPs) ? 1 : 0;
}

struct ClassCode {
  int label1 = 0;
  int label2 = 0;
  int decision = 0;  // 1 keep as point source, 0 discard as background
  ObjectClass object_class = ObjectClass::FaintBkg;
};

inline ClassCode code_from_labels(int label1, int label2) {
  if ((label1 != 0 && label1 != 1) || (label2 != 0 && label2 != 1))
    throw DomainError("code_from_labels: labels must be 0 or 1");
  ClassCode code;
  code.label1 = label1;
  code.label2 = label2;
  code.decision = label1 ^ label2;
  if (label1 == 1)
    code.object_class = (label2 == 0) ? ObjectClass::BrightPs : ObjectClass::BrightBkg;
  else
    code.object_class = (label2 == 1) ? ObjectClass::FaintPs : ObjectClass::FaintBkg;
  return code;
}

inline bool is_point_source(ObjectClass c) {
  return c == ObjectClass::BrightPs || c == ObjectClass::FaintPs;
}

// Ground-truth record: where an object really is and what it really is.
// Positions are in event coordinates (x right, y down, sub-pixel).
struct TruthSource {
  double x = 0.0;
  double y = 0.0;
  ObjectClass object_class = ObjectClass::FaintBkg;
};

// Training-label record: a pixel position with its assigned class.
struct LabeledPosition {
  int row = 0;
  int col = 0;
  ObjectClass object_class = ObjectClass::FaintBkg;
};

}  // namespace psrec
