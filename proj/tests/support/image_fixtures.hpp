#pragma once

// Encoded with Pillow; pixel values are listed next to each decoding test.

#include <cstdint>
#include <vector>

namespace fixtures {

inline const std::vector<std::uint8_t> kPngRgb2x2 = {137, 80, 78, 71, 13, 10, 26, 10, 0, 0, 0, 13, 73, 72, 68, 82, 0, 0, 0, 2, 0, 0, 0, 2, 8, 2, 0, 0, 0, 253, 212, 154, 115, 0, 0, 0, 22, 73, 68, 65, 84, 120, 156, 99, 248, 207, 192, 192, 240, 159, 129, 145, 129, 225, 63, 87, 195, 111, 0, 28, 20, 4, 132, 0, 151, 124, 64, 0, 0, 0, 0, 73, 69, 78, 68, 174, 66, 96, 130};

inline const std::vector<std::uint8_t> kPngGray2x2 = {137, 80, 78, 71, 13, 10, 26, 10, 0, 0, 0, 13, 73, 72, 68, 82, 0, 0, 0, 2, 0, 0, 0, 2, 8, 0, 0, 0, 0, 87, 221, 82, 248, 0, 0, 0, 14, 73, 68, 65, 84, 120, 156, 99, 96, 112, 96, 104, 248, 15, 0, 3, 5, 1, 192, 78, 51, 91, 233, 0, 0, 0, 0, 73, 69, 78, 68, 174, 66, 96, 130};

inline const std::vector<std::uint8_t> kPngGray16_2x2 = {137, 80, 78, 71, 13, 10, 26, 10, 0, 0, 0, 13, 73, 72, 68, 82, 0, 0, 0, 2, 0, 0, 0, 2, 16, 0, 0, 0, 0, 7, 77, 142, 187, 0, 0, 0, 18, 73, 68, 65, 84, 120, 156, 99, 96, 96, 96, 126, 193, 48, 199, 225, 255, 127, 0, 11, 188, 3, 198, 135, 146, 216, 87, 0, 0, 0, 0, 73, 69, 78, 68, 174, 66, 96, 130};

inline const std::vector<std::uint8_t> kPngRgba2x2 = {137, 80, 78, 71, 13, 10, 26, 10, 0, 0, 0, 13, 73, 72, 68, 82, 0, 0, 0, 2, 0, 0, 0, 2, 8, 6, 0, 0, 0, 114, 182, 13, 36, 0, 0, 0, 26, 73, 68, 65, 84, 120, 156, 99, 248, 207, 192, 240, 159, 225, 63, 3, 3, 11, 35, 195, 255, 70, 174, 198, 223, 236, 0, 55, 58, 6, 16, 11, 14, 217, 6, 0, 0, 0, 0, 73, 69, 78, 68, 174, 66, 96, 130};

inline const std::vector<std::uint8_t> kPngPalette2x2 = {137, 80, 78, 71, 13, 10, 26, 10, 0, 0, 0, 13, 73, 72, 68, 82, 0, 0, 0, 2, 0, 0, 0, 2, 2, 3, 0, 0, 0, 15, 216, 229, 183, 0, 0, 0, 12, 80, 76, 84, 69, 0, 255, 0, 10, 128, 250, 255, 0, 0, 0, 0, 255, 224, 15, 138, 174, 0, 0, 0, 12, 73, 68, 65, 84, 120, 156, 99, 104, 96, 184, 0, 0, 2, 84, 1, 81, 97, 38, 81, 225, 0, 0, 0, 0, 73, 69, 78, 68, 174, 66, 96, 130};

inline const std::vector<std::uint8_t> kTiffRgb2x2 = {73, 73, 42, 0, 8, 0, 0, 0, 10, 0, 0, 1, 4, 0, 1, 0, 0, 0, 2, 0, 0, 0, 1, 1, 4, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 1, 3, 0, 3, 0, 0, 0, 134, 0, 0, 0, 3, 1, 3, 0, 1, 0, 0, 0, 1, 0, 0, 0, 6, 1, 3, 0, 1, 0, 0, 0, 2, 0, 0, 0, 17, 1, 4, 0, 1, 0, 0, 0, 140, 0, 0, 0, 21, 1, 3, 0, 1, 0, 0, 0, 3, 0, 0, 0, 22, 1, 4, 0, 1, 0, 0, 0, 2, 0, 0, 0, 23, 1, 4, 0, 1, 0, 0, 0, 12, 0, 0, 0, 28, 1, 3, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 8, 0, 8, 0, 8, 0, 255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 128, 250};

inline const std::vector<std::uint8_t> kTiffRgbLzw2x2 = {73, 73, 42, 0, 20, 0, 0, 0, 128, 63, 192, 16, 56, 20, 16, 20, 128, 125, 64, 64, 10, 0, 0, 1, 3, 0, 1, 0, 0, 0, 2, 0, 0, 0, 1, 1, 3, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 1, 3, 0, 3, 0, 0, 0, 146, 0, 0, 0, 3, 1, 3, 0, 1, 0, 0, 0, 5, 0, 0, 0, 6, 1, 3, 0, 1, 0, 0, 0, 2, 0, 0, 0, 17, 1, 4, 0, 1, 0, 0, 0, 8, 0, 0, 0, 21, 1, 3, 0, 1, 0, 0, 0, 3, 0, 0, 0, 22, 1, 3, 0, 1, 0, 0, 0, 2, 0, 0, 0, 23, 1, 4, 0, 1, 0, 0, 0, 12, 0, 0, 0, 28, 1, 3, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 8, 0, 8, 0, 8, 0};

inline const std::vector<std::uint8_t> kTiffGray2x2 = {73, 73, 42, 0, 8, 0, 0, 0, 9, 0, 0, 1, 4, 0, 1, 0, 0, 0, 2, 0, 0, 0, 1, 1, 4, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 1, 3, 0, 1, 0, 0, 0, 8, 0, 0, 0, 3, 1, 3, 0, 1, 0, 0, 0, 1, 0, 0, 0, 6, 1, 3, 0, 1, 0, 0, 0, 1, 0, 0, 0, 17, 1, 4, 0, 1, 0, 0, 0, 122, 0, 0, 0, 22, 1, 4, 0, 1, 0, 0, 0, 2, 0, 0, 0, 23, 1, 4, 0, 1, 0, 0, 0, 4, 0, 0, 0, 28, 1, 3, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 64, 128, 255};

}  // namespace fixtures
