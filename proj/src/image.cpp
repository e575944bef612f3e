#include "qis/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qis {

void validate_intensity(const Image& img) {
    for (double v : img.pixels) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw std::invalid_argument("intensity image pixels must lie in [0,1]");
    }
}

void validate_radiance(const Image& img) {
    for (double v : img.pixels) {
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("radiance pixels must be finite and >= 0");
    }
}

namespace {

// Skips whitespace and '#' comment lines between PGM header tokens.
std::string next_pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
        } else if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#')
                tok.push_back(static_cast<char>(in.get()));
            return tok;
        }
    }
    throw std::runtime_error("unexpected end of PGM header");
}

}  // namespace

Image load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open PGM file: " + path);
    if (next_pgm_token(in) != "P5")
        throw std::runtime_error("not a binary (P5) PGM file: " + path);
    const int w = std::stoi(next_pgm_token(in));
    const int h = std::stoi(next_pgm_token(in));
    const int maxval = std::stoi(next_pgm_token(in));
    if (w <= 0 || h <= 0) throw std::runtime_error("bad PGM dimensions: " + path);
    if (maxval != 255) throw std::runtime_error("only maxval 255 PGM supported: " + path);

    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw std::runtime_error("truncated PGM payload: " + path);

    Image img(w, h);
    std::transform(raw.begin(), raw.end(), img.pixels.begin(),
                   [](unsigned char v) { return v / 255.0; });
    return img;
}

void save_pgm(const Image& img, const std::string& path, const std::string& comment) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write PGM file: " + path);
    out << "P5\n";
    if (!comment.empty()) out << "# " << comment << "\n";
    out << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.pixels.size());
    std::transform(img.pixels.begin(), img.pixels.end(), raw.begin(), [](double v) {
        return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    });
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("failed writing PGM payload: " + path);
}

Image load_csv_image(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (cell.empty()) continue;
            row.push_back(std::stod(cell));
        }
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("ragged CSV rows in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("empty CSV image: " + path);
    Image img(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) img.at(x, y) = rows[y][x];
    return img;
}

void save_csv_image(const Image& img, const std::string& path, const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write CSV file: " + path);
    if (!comment.empty()) out << "# " << comment << "\n";
    out.precision(17);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (x) out << ",";
            out << img.at(x, y);
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("failed writing CSV image: " + path);
}

double mean(const Image& img) {
    if (img.pixels.empty()) return 0.0;
    return std::accumulate(img.pixels.begin(), img.pixels.end(), 0.0) / img.pixels.size();
}

}  // namespace qis
