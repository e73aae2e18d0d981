#include "poolface/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "poolface/error.hpp"

namespace poolface {

Raster read_image(const std::string& path) {
  cv::Mat mat = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw Error(ErrorCode::IoError, "cannot decode image " + path);
  if (mat.depth() != CV_8U) {
    throw Error(ErrorCode::IoError, "only 8-bit images are supported: " + path);
  }
  const int channels = mat.channels() == 1 ? 1 : 3;
  Raster out(mat.cols, mat.rows, channels);
  for (int y = 0; y < mat.rows; ++y) {
    const std::uint8_t* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < mat.cols; ++x) {
      if (channels == 1) {
        out.at(0, y, x) = row[x] / 255.0f;
      } else {
        // OpenCV pixel order is BGR(A).
        const std::uint8_t* px = row + x * mat.channels();
        out.at(0, y, x) = px[2] / 255.0f;
        out.at(1, y, x) = px[1] / 255.0f;
        out.at(2, y, x) = px[0] / 255.0f;
      }
    }
  }
  return out;
}

void write_png(const std::string& path, const Raster& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw Error(ErrorCode::ShapeMismatch, "PNG export needs 1 or 3 channels");
  }
  cv::Mat mat(image.height(), image.width(), image.channels() == 1 ? CV_8UC1 : CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    std::uint8_t* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.width(); ++x) {
      if (image.channels() == 1) {
        row[x] = to_u8(image.at(0, y, x));
      } else {
        row[3 * x + 0] = to_u8(image.at(2, y, x));
        row[3 * x + 1] = to_u8(image.at(1, y, x));
        row[3 * x + 2] = to_u8(image.at(0, y, x));
      }
    }
  }
  if (!cv::imwrite(path, mat)) throw Error(ErrorCode::IoError, "cannot write " + path);
}

}  // namespace poolface
