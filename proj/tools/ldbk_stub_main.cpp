// Test peer for the external-backend wire protocol. Reads one request from
// stdin, writes one response to stdout. The first argument selects behavior:
//
//   const-matte V      alpha plane filled with byte V
//   sidecar-matte DIR  alpha plane from DIR/alpha_<n>.raw, n = calls so far
//                      (a counter file in DIR persists across invocations)
//   identity-inpaint   RGB copied from the request image
//   fill-inpaint R G B masked pixels set to the given bytes, rest copied
//   wrong-dims         response header advertises width+1
//   truncated          response cut off before the payload ends
//   garbage            a few junk bytes, no valid header
//   hang SECONDS       reads the request, then sleeps without replying
//   fail CODE          reads the request, then exits with CODE

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

namespace {

bool read_exact(std::vector<uint8_t>& buf, size_t count) {
    size_t start = buf.size();
    buf.resize(start + count);
    size_t got = 0;
    while (got < count) {
        ssize_t n = read(STDIN_FILENO, buf.data() + start + got, count - got);
        if (n <= 0) return false;
        got += static_cast<size_t>(n);
    }
    return true;
}

void write_all(const std::vector<uint8_t>& bytes) {
    size_t sent = 0;
    while (sent < bytes.size()) {
        ssize_t n = write(STDOUT_FILENO, bytes.data() + sent, bytes.size() - sent);
        if (n <= 0) std::exit(7);
        sent += static_cast<size_t>(n);
    }
}

uint32_t read_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
           static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

std::vector<uint8_t> header(uint8_t mode, uint32_t width, uint32_t height) {
    std::vector<uint8_t> h = {'L', 'D', 'B', 'K', 1, mode};
    put_u32(h, width);
    put_u32(h, height);
    h.push_back(0);
    h.push_back(0);
    return h;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: ldbk_stub MODE [ARGS]\n");
        return 64;
    }
    const std::string mode = argv[1];

    std::vector<uint8_t> req;
    if (!read_exact(req, 16)) return 65;
    if (std::memcmp(req.data(), "LDBK", 4) != 0 || req[4] != 1) return 66;
    const uint8_t req_mode = req[5];
    const uint32_t width = read_u32(req.data() + 6);
    const uint32_t height = read_u32(req.data() + 10);
    const size_t pixels = static_cast<size_t>(width) * height;

    size_t payload = pixels * 4;
    if (req_mode == 2) payload += pixels;  // mask
    if (!read_exact(req, payload)) return 65;
    const uint8_t* rgba = req.data() + 16;
    const uint8_t* mask = req.data() + 16 + pixels * 4;

    if (mode == "const-matte") {
        uint8_t v = argc > 2 ? static_cast<uint8_t>(std::atoi(argv[2])) : 255;
        std::vector<uint8_t> resp = header(1, width, height);
        resp.insert(resp.end(), pixels, v);
        write_all(resp);
        return 0;
    }
    if (mode == "sidecar-matte") {
        if (argc < 3) return 64;
        std::filesystem::path dir = argv[2];
        int call = 0;
        {
            std::ifstream counter(dir / "counter");
            if (counter) counter >> call;
        }
        {
            std::ofstream counter(dir / "counter", std::ios::trunc);
            counter << (call + 1);
        }
        std::ifstream alpha(dir / ("alpha_" + std::to_string(call) + ".raw"),
                            std::ios::binary);
        std::vector<uint8_t> plane(pixels, 0);
        if (alpha)
            alpha.read(reinterpret_cast<char*>(plane.data()),
                       static_cast<std::streamsize>(pixels));
        std::vector<uint8_t> resp = header(1, width, height);
        resp.insert(resp.end(), plane.begin(), plane.end());
        write_all(resp);
        return 0;
    }
    if (mode == "identity-inpaint" || mode == "fill-inpaint") {
        uint8_t fill[3] = {0, 0, 0};
        bool use_fill = mode == "fill-inpaint";
        if (use_fill) {
            if (argc < 5) return 64;
            for (int c = 0; c < 3; ++c)
                fill[c] = static_cast<uint8_t>(std::atoi(argv[2 + c]));
        }
        std::vector<uint8_t> resp = header(2, width, height);
        resp.reserve(resp.size() + pixels * 3);
        for (size_t i = 0; i < pixels; ++i) {
            bool masked = req_mode == 2 && mask[i] != 0;
            for (int c = 0; c < 3; ++c)
                resp.push_back(use_fill && masked ? fill[c] : rgba[i * 4 + c]);
        }
        write_all(resp);
        return 0;
    }
    if (mode == "wrong-dims") {
        std::vector<uint8_t> resp = header(req_mode, width + 1, height);
        size_t out = req_mode == 1 ? pixels : pixels * 3;
        resp.insert(resp.end(), out, 0);
        write_all(resp);
        return 0;
    }
    if (mode == "truncated") {
        std::vector<uint8_t> resp = header(req_mode, width, height);
        resp.insert(resp.end(), pixels / 2, 0);
        write_all(resp);
        return 0;
    }
    if (mode == "garbage") {
        write_all({'n', 'o', 'p', 'e'});
        return 0;
    }
    if (mode == "hang") {
        double seconds = argc > 2 ? std::atof(argv[2]) : 60.0;
        std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
        return 0;
    }
    if (mode == "fail") {
        return argc > 2 ? std::atoi(argv[2]) : 1;
    }
    std::fprintf(stderr, "unknown mode: %s\n", mode.c_str());
    return 64;
}
