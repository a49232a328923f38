#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "genearl/backends.hpp"
#include "genearl/error.hpp"
#include "genearl/json_io.hpp"
#include "genearl/text.hpp"

namespace genearl {

namespace {

std::string mime_for(const std::string& ref) {
  const std::string ext = text::to_lower(std::filesystem::path(ref).extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "application/octet-stream";
}

}  // namespace

ImagePayload load_image_payload(const ImageSlot& slot, double padding) {
  if (!slot.crop) {
    try {
      return {json_io::read_file(slot.image_ref), mime_for(slot.image_ref)};
    } catch (const InputError&) {
      throw InputError("unreadable image '" + slot.image_ref + "'");
    }
  }
  const cv::Mat image = cv::imread(slot.image_ref, cv::IMREAD_UNCHANGED);
  if (image.empty()) throw InputError("unreadable image '" + slot.image_ref + "'");

  const BBox& b = *slot.crop;
  // Sub-pixel overshoot from float annotations is tolerated.
  constexpr double kSlack = 0.5;
  if (!b.valid() || b.x + b.width > image.cols + kSlack || b.y + b.height > image.rows + kSlack) {
    throw InputError("bbox outside image bounds for '" + slot.image_ref + "'");
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(b.x - padding)));
  const int y0 = std::max(0, static_cast<int>(std::floor(b.y - padding)));
  const int x1 = std::min(image.cols, static_cast<int>(std::ceil(b.x + b.width + padding)));
  const int y1 = std::min(image.rows, static_cast<int>(std::ceil(b.y + b.height + padding)));
  if (x1 <= x0 || y1 <= y0) throw InputError("empty crop for '" + slot.image_ref + "'");

  std::vector<unsigned char> encoded;
  if (!cv::imencode(".png", image(cv::Rect(x0, y0, x1 - x0, y1 - y0)), encoded)) {
    throw InputError("cannot encode crop of '" + slot.image_ref + "'");
  }
  return {std::string(encoded.begin(), encoded.end()), "image/png"};
}

}  // namespace genearl
