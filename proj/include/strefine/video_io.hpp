#pragma once

// Sequence input/output: YUV4MPEG2 (4:2:0), headerless planar YUV 4:2:0 and
// directories of binary PGM frames.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "strefine/plane.hpp"

namespace strefine {

struct Frame {
    LumaPlane y;
    LumaPlane u;  ///< empty for grayscale sources
    LumaPlane v;
};

struct VideoSequence {
    int width = 0;
    int height = 0;
    int fps_num = 30;
    int fps_den = 1;
    std::vector<Frame> frames;

    double fps() const { return double(fps_num) / double(fps_den); }
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"), offset_(byte_offset)
    {
    }
    std::size_t byte_offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Reads at most max_frames frames (all when nullopt).
VideoSequence read_y4m(const std::filesystem::path& path, std::optional<std::size_t> max_frames = std::nullopt);
VideoSequence read_raw_yuv420(const std::filesystem::path& path, int width, int height,
                              std::optional<std::size_t> max_frames = std::nullopt);
/// Every *.pgm in the directory, in file-name order.
VideoSequence read_pgm_directory(const std::filesystem::path& dir,
                                 std::optional<std::size_t> max_frames = std::nullopt);

/// Picks the reader from the path: directories are PGM sequences, *.y4m is
/// YUV4MPEG2, anything else is raw 4:2:0 and needs width and height.
VideoSequence read_sequence(const std::filesystem::path& path, std::optional<int> width = std::nullopt,
                            std::optional<int> height = std::nullopt,
                            std::optional<std::size_t> max_frames = std::nullopt);

/// Grayscale frames are written with neutral (128) chroma.
void write_raw_yuv420(const VideoSequence& seq, const std::filesystem::path& path);
void write_y4m(const VideoSequence& seq, const std::filesystem::path& path);
void write_pgm(const LumaPlane& plane, const std::filesystem::path& path);

std::vector<LumaPlane> luma_planes(const VideoSequence& seq);

/// Wraps luma planes as a grayscale sequence.
VideoSequence sequence_from_luma(const std::vector<LumaPlane>& planes, int fps_num = 30, int fps_den = 1);

}  // namespace strefine
