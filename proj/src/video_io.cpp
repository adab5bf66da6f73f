#include "strefine/video_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace strefine {

namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t chroma_dim(int luma) { return std::size_t((luma + 1) / 2); }

// Copies a w x h plane starting at offset; the caller checks bounds.
LumaPlane read_plane(const std::vector<unsigned char>& bytes, std::size_t offset, int w, int h)
{
    LumaPlane p(w, h);
    std::memcpy(p.data(), bytes.data() + offset, p.size());
    return p;
}

void write_plane(std::ofstream& out, const LumaPlane& p)
{
    out.write(reinterpret_cast<const char*>(p.data()), std::streamsize(p.size()));
}

int parse_int(const std::string& s, std::size_t offset, const char* what)
{
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("malformed ") + what + " '" + s + "'", offset);
    }
}

}  // namespace

VideoSequence read_y4m(const std::filesystem::path& path, std::optional<std::size_t> max_frames)
{
    const std::vector<unsigned char> bytes = slurp(path);
    static constexpr char kMagic[] = "YUV4MPEG2";
    const std::size_t magic_len = sizeof(kMagic) - 1;
    if (bytes.size() < magic_len || std::memcmp(bytes.data(), kMagic, magic_len) != 0)
        throw ParseError("not a YUV4MPEG2 stream: missing signature", 0);

    const auto eol = std::find(bytes.begin(), bytes.end(), '\n');
    if (eol == bytes.end())
        throw ParseError("unterminated stream header", 0);
    const std::size_t header_end = std::size_t(eol - bytes.begin());

    VideoSequence seq;
    std::size_t pos = magic_len;
    while (pos < header_end) {
        if (bytes[pos] == ' ') {
            ++pos;
            continue;
        }
        const std::size_t start = pos;
        while (pos < header_end && bytes[pos] != ' ')
            ++pos;
        const std::string token(bytes.begin() + std::ptrdiff_t(start), bytes.begin() + std::ptrdiff_t(pos));
        const char tag = token[0];
        const std::string value = token.substr(1);
        switch (tag) {
        case 'W':
            seq.width = parse_int(value, start, "width");
            break;
        case 'H':
            seq.height = parse_int(value, start, "height");
            break;
        case 'F': {
            const auto colon = value.find(':');
            if (colon == std::string::npos)
                throw ParseError("malformed frame rate '" + value + "'", start);
            seq.fps_num = parse_int(value.substr(0, colon), start, "frame rate");
            seq.fps_den = parse_int(value.substr(colon + 1), start, "frame rate");
            if (seq.fps_num <= 0 || seq.fps_den <= 0)
                throw ParseError("non-positive frame rate '" + value + "'", start);
            break;
        }
        case 'C':
            if (value != "420" && value != "420jpeg" && value != "420paldv" && value != "420mpeg2")
                throw ParseError("unsupported chroma format 'C" + value + "' (only 4:2:0 is supported)", start);
            break;
        case 'I':
        case 'A':
        case 'X':
            break;
        default:
            throw ParseError("unknown stream header tag '" + token + "'", start);
        }
    }
    if (seq.width <= 0 || seq.height <= 0)
        throw ParseError("stream header lacks a positive width and height", 0);

    const std::size_t luma = std::size_t(seq.width) * std::size_t(seq.height);
    const std::size_t chroma = chroma_dim(seq.width) * chroma_dim(seq.height);
    const std::size_t payload = luma + 2 * chroma;
    const int cw = int(chroma_dim(seq.width));
    const int ch = int(chroma_dim(seq.height));

    pos = header_end + 1;
    while (pos < bytes.size() && (!max_frames || seq.frames.size() < *max_frames)) {
        const std::size_t index = seq.frames.size();
        const std::size_t frame_start = pos;
        static constexpr char kFrame[] = "FRAME";
        if (bytes.size() - pos < 5 || std::memcmp(bytes.data() + pos, kFrame, 5) != 0) {
            if (bytes.size() - pos < 5)
                throw ParseError("truncated frame " + std::to_string(index) + " header", frame_start);
            throw ParseError("frame " + std::to_string(index) + " does not start with FRAME", frame_start);
        }
        const auto feol = std::find(bytes.begin() + std::ptrdiff_t(pos), bytes.end(), '\n');
        if (feol == bytes.end())
            throw ParseError("truncated frame " + std::to_string(index) + " header", frame_start);
        pos = std::size_t(feol - bytes.begin()) + 1;
        if (bytes.size() - pos < payload)
            throw ParseError("truncated frame " + std::to_string(index) + ": expected " + std::to_string(payload) +
                                 " bytes, found " + std::to_string(bytes.size() - pos),
                             frame_start);
        Frame f;
        f.y = read_plane(bytes, pos, seq.width, seq.height);
        f.u = read_plane(bytes, pos + luma, cw, ch);
        f.v = read_plane(bytes, pos + luma + chroma, cw, ch);
        seq.frames.push_back(std::move(f));
        pos += payload;
    }
    return seq;
}

VideoSequence read_raw_yuv420(const std::filesystem::path& path, int width, int height,
                              std::optional<std::size_t> max_frames)
{
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("read_raw_yuv420: width and height must be positive");
    const std::vector<unsigned char> bytes = slurp(path);
    VideoSequence seq;
    seq.width = width;
    seq.height = height;
    const std::size_t luma = std::size_t(width) * std::size_t(height);
    const std::size_t chroma = chroma_dim(width) * chroma_dim(height);
    const std::size_t frame_bytes = luma + 2 * chroma;
    const int cw = int(chroma_dim(width));
    const int ch = int(chroma_dim(height));
    std::size_t pos = 0;
    while (pos < bytes.size() && (!max_frames || seq.frames.size() < *max_frames)) {
        if (bytes.size() - pos < frame_bytes)
            throw ParseError("truncated frame " + std::to_string(seq.frames.size()) + ": expected " +
                                 std::to_string(frame_bytes) + " bytes, found " + std::to_string(bytes.size() - pos),
                             pos);
        Frame f;
        f.y = read_plane(bytes, pos, width, height);
        f.u = read_plane(bytes, pos + luma, cw, ch);
        f.v = read_plane(bytes, pos + luma + chroma, cw, ch);
        seq.frames.push_back(std::move(f));
        pos += frame_bytes;
    }
    return seq;
}

namespace {

LumaPlane read_pgm(const std::filesystem::path& path)
{
    const std::vector<unsigned char> bytes = slurp(path);
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_number = [&](const char* what) {
        skip_space();
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(bytes[pos]))
            ++pos;
        if (start == pos)
            throw ParseError(path.string() + ": missing " + what, start);
        return parse_int(std::string(bytes.begin() + std::ptrdiff_t(start), bytes.begin() + std::ptrdiff_t(pos)),
                         start, what);
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw ParseError(path.string() + ": not a binary PGM (P5) file", 0);
    pos = 2;
    const int w = read_number("width");
    const int h = read_number("height");
    const int maxval = read_number("maxval");
    if (w <= 0 || h <= 0)
        throw ParseError(path.string() + ": non-positive dimensions", pos);
    if (maxval <= 0 || maxval > 255)
        throw ParseError(path.string() + ": only 8-bit PGM is supported", pos);
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw ParseError(path.string() + ": malformed header", pos);
    ++pos;
    const std::size_t need = std::size_t(w) * std::size_t(h);
    if (bytes.size() - pos < need)
        throw ParseError(path.string() + ": truncated pixel data", pos);
    return read_plane(bytes, pos, w, h);
}

}  // namespace

VideoSequence read_pgm_directory(const std::filesystem::path& dir, std::optional<std::size_t> max_frames)
{
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("'" + dir.string() + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw std::runtime_error("no .pgm files in '" + dir.string() + "'");

    VideoSequence seq;
    for (const auto& f : files) {
        if (max_frames && seq.frames.size() >= *max_frames)
            break;
        Frame frame;
        frame.y = read_pgm(f);
        if (seq.frames.empty()) {
            seq.width = frame.y.width();
            seq.height = frame.y.height();
        } else if (frame.y.width() != seq.width || frame.y.height() != seq.height) {
            throw std::runtime_error("'" + f.string() + "' differs in size from the first frame");
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

VideoSequence read_sequence(const std::filesystem::path& path, std::optional<int> width, std::optional<int> height,
                            std::optional<std::size_t> max_frames)
{
    if (std::filesystem::is_directory(path))
        return read_pgm_directory(path, max_frames);
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    if (ext == ".y4m")
        return read_y4m(path, max_frames);
    if (!width || !height)
        throw std::invalid_argument("raw YUV input '" + path.string() + "' needs explicit width and height");
    return read_raw_yuv420(path, *width, *height, max_frames);
}

namespace {

void write_frame_payload(std::ofstream& out, const VideoSequence& seq, const Frame& f)
{
    write_plane(out, f.y);
    if (f.u.empty() || f.v.empty()) {
        const LumaPlane neutral(int(chroma_dim(seq.width)), int(chroma_dim(seq.height)), 128);
        write_plane(out, neutral);
        write_plane(out, neutral);
    } else {
        write_plane(out, f.u);
        write_plane(out, f.v);
    }
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

}  // namespace

void write_raw_yuv420(const VideoSequence& seq, const std::filesystem::path& path)
{
    std::ofstream out = open_output(path);
    for (const Frame& f : seq.frames)
        write_frame_payload(out, seq, f);
}

void write_y4m(const VideoSequence& seq, const std::filesystem::path& path)
{
    std::ofstream out = open_output(path);
    out << "YUV4MPEG2 W" << seq.width << " H" << seq.height << " F" << seq.fps_num << ':' << seq.fps_den
        << " Ip A1:1 C420jpeg\n";
    for (const Frame& f : seq.frames) {
        out << "FRAME\n";
        write_frame_payload(out, seq, f);
    }
}

void write_pgm(const LumaPlane& plane, const std::filesystem::path& path)
{
    std::ofstream out = open_output(path);
    out << "P5\n" << plane.width() << ' ' << plane.height() << "\n255\n";
    write_plane(out, plane);
}

std::vector<LumaPlane> luma_planes(const VideoSequence& seq)
{
    std::vector<LumaPlane> out;
    out.reserve(seq.frames.size());
    for (const Frame& f : seq.frames)
        out.push_back(f.y);
    return out;
}

VideoSequence sequence_from_luma(const std::vector<LumaPlane>& planes, int fps_num, int fps_den)
{
    VideoSequence seq;
    seq.fps_num = fps_num;
    seq.fps_den = fps_den;
    if (!planes.empty()) {
        seq.width = planes.front().width();
        seq.height = planes.front().height();
    }
    for (const LumaPlane& p : planes)
        seq.frames.push_back({p, {}, {}});
    return seq;
}

}  // namespace strefine
