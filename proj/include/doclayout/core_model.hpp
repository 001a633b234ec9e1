#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace doclayout {

// Fixed 7-class layout taxonomy. Ids follow the row order of the class table
// used for annotation: 0=title ... 6=table_caption.
enum class ClassLabel : std::uint8_t {
  kTitle = 0,
  kText = 1,
  kImage = 2,
  kCaption = 3,
  kImageCaption = 4,
  kTable = 5,
  kTableCaption = 6,
};

inline constexpr int kNumClasses = 7;

inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses = {
    ClassLabel::kTitle,        ClassLabel::kText,  ClassLabel::kImage,
    ClassLabel::kCaption,      ClassLabel::kImageCaption,
    ClassLabel::kTable,        ClassLabel::kTableCaption,
};

constexpr int class_id(ClassLabel c) { return static_cast<int>(c); }

// Canonical lowercase name.
std::string_view name_of(ClassLabel c);

// Case-insensitive lookup; throws UnknownClass.
ClassLabel class_from_name(std::string_view name);

// Throws UnknownClass when id is outside 0..6.
ClassLabel class_from_id(long id);

// image_caption and table_caption bound other components.
constexpr bool is_group(ClassLabel c) {
  return c == ClassLabel::kImageCaption || c == ClassLabel::kTableCaption;
}

// Axis-aligned rectangle in absolute pixels, origin top-left, y down.
// Corners are normalized on construction so x1 <= x2 and y1 <= y2.
// Coordinates must be finite; non-negativity and image bounds are
// established by clamp_to_image() at the parsing boundary.
class BBox {
 public:
  BBox() = default;
  BBox(double x1, double y1, double x2, double y2);

  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double x2() const { return x2_; }
  double y2() const { return y2_; }
  double width() const { return x2_ - x1_; }
  double height() const { return y2_ - y1_; }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x1_ = 0, y1_ = 0, x2_ = 0, y2_ = 0;
};

// Ground-truth region.
struct Annotation {
  BBox bbox;
  ClassLabel label = ClassLabel::kText;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

// Model output for one region. The constructor rejects scores outside [0,1].
struct Detection {
  Detection() = default;
  Detection(BBox b, ClassLabel l, double s);

  BBox bbox;
  ClassLabel label = ClassLabel::kText;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct PageRecord {
  std::string page_id;
  int image_width = 0;
  int image_height = 0;
  std::vector<Annotation> annotations;
  std::vector<Detection> detections;

  friend bool operator==(const PageRecord&, const PageRecord&) = default;
};

// Throws std::invalid_argument when a page breaks its invariants (empty id,
// non-positive size, a box outside [0,w]x[0,h]).
void validate_page(const PageRecord& page);

}  // namespace doclayout
