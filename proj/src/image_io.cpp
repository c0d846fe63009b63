#include <cctype>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mhnlm/image.hpp"

namespace mhnlm {
namespace {

using Kind = ImageIoError::Kind;

class HeaderReader {
public:
    HeaderReader(const std::vector<unsigned char>& bytes, const std::string& name)
        : bytes_(bytes), name_(name) {}

    // Next whitespace-delimited token, skipping '#' comments.
    std::string token() {
        skip_space_and_comments();
        std::string tok;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) {
            tok.push_back(static_cast<char>(bytes_[pos_++]));
        }
        if (tok.empty()) fail("truncated header");
        return tok;
    }

    int integer() {
        const std::string tok = token();
        for (char ch : tok) {
            if (!std::isdigit(static_cast<unsigned char>(ch))) fail("expected integer, got '" + tok + "'");
        }
        if (tok.size() > 9) fail("header value out of range");
        return std::stoi(tok);
    }

    // Exactly one whitespace byte separates maxval from a binary raster.
    void single_space() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("missing raster separator");
        ++pos_;
    }

    std::size_t position() const { return pos_; }

    [[noreturn]] void fail(const std::string& why) const {
        throw ImageIoError(Kind::Malformed, name_ + ": " + why);
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<unsigned char>& bytes_;
    const std::string& name_;
    std::size_t pos_ = 0;
};

}  // namespace

ImageGrid read_image(const std::filesystem::path& path) {
    const std::string name = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError(Kind::Unreadable, name + ": cannot open for reading");
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());
    if (in.bad()) throw ImageIoError(Kind::Unreadable, name + ": read error");
    if (bytes.size() < 2 || bytes[0] != 'P') {
        throw ImageIoError(Kind::Malformed, name + ": not a PNM file");
    }

    const char variant = static_cast<char>(bytes[1]);
    if (variant == '3' || variant == '6') {
        throw ImageIoError(Kind::NotGrayscale, name + ": color PPM is not supported");
    }
    if (variant == '1' || variant == '4') {
        throw ImageIoError(Kind::UnsupportedDepth, name + ": 1-bit PBM is not supported");
    }
    if (variant != '2' && variant != '5') {
        throw ImageIoError(Kind::Malformed, name + ": unknown PNM variant P" + variant);
    }

    HeaderReader header(bytes, name);
    header.token();  // magic
    const int width = header.integer();
    const int height = header.integer();
    const int maxval = header.integer();
    if (width < 1 || height < 1) header.fail("empty image");
    if (maxval != 255) {
        throw ImageIoError(Kind::UnsupportedDepth,
                           name + ": maxval " + std::to_string(maxval) + " (only 255 supported)");
    }

    const std::size_t count = static_cast<std::size_t>(width) * height;
    std::vector<double> data;
    data.reserve(count);
    if (variant == '5') {
        header.single_space();
        const std::size_t start = header.position();
        if (bytes.size() - start < count) {
            throw ImageIoError(Kind::Malformed, name + ": truncated raster");
        }
        for (std::size_t i = 0; i < count; ++i) data.push_back(bytes[start + i]);
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            const int v = header.integer();
            if (v > 255) header.fail("sample exceeds maxval");
            data.push_back(v);
        }
    }
    return ImageGrid(width, height, std::move(data));
}

void write_image(const ImageGrid& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ImageIoError(Kind::WriteFailed, path.string() + ": cannot open for writing");
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<char> raster;
    raster.reserve(img.size());
    for (double v : img.pixels()) raster.push_back(static_cast<char>(quantize(v)));
    out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
    if (!out) throw ImageIoError(Kind::WriteFailed, path.string() + ": write failed");
}

}  // namespace mhnlm
