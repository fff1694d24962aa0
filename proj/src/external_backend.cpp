#include "layerkit/external_backend.hpp"

#include <errno.h>
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstring>

#include "layerkit/sequence_io.hpp"

namespace layerkit {

namespace ldbk {

std::vector<uint8_t> make_header(uint8_t mode, uint32_t width,
                                 uint32_t height) {
    std::vector<uint8_t> h(kHeaderSize, 0);
    std::memcpy(h.data(), kMagic, 4);
    h[4] = kVersion;
    h[5] = mode;
    for (int i = 0; i < 4; ++i) {
        h[6 + i] = static_cast<uint8_t>((width >> (8 * i)) & 0xFF);
        h[10 + i] = static_cast<uint8_t>((height >> (8 * i)) & 0xFF);
    }
    return h;
}

uint8_t parse_header(const std::vector<uint8_t>& bytes, uint32_t expect_width,
                     uint32_t expect_height) {
    if (bytes.size() < kHeaderSize)
        throw BackendError(BackendError::Kind::malformed_output,
                           "external backend: response shorter than header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw BackendError(BackendError::Kind::malformed_output,
                           "external backend: bad magic");
    if (bytes[4] != kVersion)
        throw BackendError(BackendError::Kind::malformed_output,
                           "external backend: unsupported version");
    uint32_t width = 0;
    uint32_t height = 0;
    for (int i = 0; i < 4; ++i) {
        width |= static_cast<uint32_t>(bytes[6 + i]) << (8 * i);
        height |= static_cast<uint32_t>(bytes[10 + i]) << (8 * i);
    }
    if (width != expect_width || height != expect_height)
        throw BackendError(BackendError::Kind::malformed_output,
                           "external backend: response dimensions differ "
                           "from the request");
    return bytes[5];
}

}  // namespace ldbk

namespace {

void set_nonblocking(int fd) {
    fcntl(fd, F_SETFL, fcntl(fd, F_GETFL, 0) | O_NONBLOCK);
}

std::vector<uint8_t> rgba8_of(const RasterImage& image) {
    const size_t n = static_cast<size_t>(image.width()) * image.height();
    std::vector<uint8_t> out(n * 4);
    for (size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c)
            out[i * 4 + c] = quantize8(image.data()[i * 3 + c]);
        out[i * 4 + 3] = 255;
    }
    return out;
}

}  // namespace

std::vector<uint8_t> run_subprocess(const ExternalBackendConfig& config,
                                    const std::vector<uint8_t>& input) {
    // catch missing or unexecutable binaries here; after fork the exec
    // failure would be indistinguishable from the backend exiting on its own
    if (access(config.executable.c_str(), X_OK) != 0)
        throw BackendError(BackendError::Kind::spawn_failure,
                           "external backend: cannot execute " +
                               config.executable);

    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0)
        throw BackendError(BackendError::Kind::spawn_failure,
                           "external backend: pipe failed");
    if (pipe(from_child) != 0) {
        close(to_child[0]);
        close(to_child[1]);
        throw BackendError(BackendError::Kind::spawn_failure,
                           "external backend: pipe failed");
    }

    const pid_t pid = fork();
    if (pid < 0) {
        for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]})
            close(fd);
        throw BackendError(BackendError::Kind::spawn_failure,
                           "external backend: fork failed");
    }
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]})
            close(fd);
        std::vector<char*> argv;
        argv.push_back(const_cast<char*>(config.executable.c_str()));
        for (const std::string& a : config.args)
            argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        execv(config.executable.c_str(), argv.data());
        _exit(127);
    }

    close(to_child[0]);
    close(from_child[1]);
    set_nonblocking(to_child[1]);
    set_nonblocking(from_child[0]);

    const auto deadline =
        std::chrono::steady_clock::now() +
        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(config.timeout_seconds));

    std::vector<uint8_t> output;
    size_t written = 0;
    bool write_open = true;
    bool read_open = true;
    bool timed_out = false;

    while (read_open) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            timed_out = true;
            break;
        }
        const int wait_ms = static_cast<int>(
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline -
                                                                  now)
                .count() +
            1);

        pollfd fds[2];
        nfds_t nfds = 0;
        int read_slot = -1;
        int write_slot = -1;
        if (read_open) {
            read_slot = static_cast<int>(nfds);
            fds[nfds++] = {from_child[0], POLLIN, 0};
        }
        if (write_open) {
            write_slot = static_cast<int>(nfds);
            fds[nfds++] = {to_child[1], POLLOUT, 0};
        }
        const int rc = poll(fds, nfds, std::min(wait_ms, 100));
        if (rc < 0 && errno != EINTR) break;

        if (write_slot >= 0 &&
            (fds[write_slot].revents & (POLLOUT | POLLERR | POLLHUP))) {
            if (fds[write_slot].revents & (POLLERR | POLLHUP)) {
                close(to_child[1]);
                write_open = false;
            } else {
                const ssize_t n =
                    write(to_child[1], input.data() + written,
                          std::min<size_t>(input.size() - written, 1 << 16));
                if (n > 0) written += static_cast<size_t>(n);
                if (n < 0 && errno != EAGAIN && errno != EINTR) {
                    close(to_child[1]);
                    write_open = false;
                }
                if (written == input.size()) {
                    close(to_child[1]);
                    write_open = false;
                }
            }
        }
        if (read_slot >= 0 &&
            (fds[read_slot].revents & (POLLIN | POLLERR | POLLHUP))) {
            uint8_t buf[1 << 16];
            const ssize_t n = read(from_child[0], buf, sizeof(buf));
            if (n > 0) {
                output.insert(output.end(), buf, buf + n);
            } else if (n == 0) {
                read_open = false;
            } else if (errno != EAGAIN && errno != EINTR) {
                read_open = false;
            }
        }
    }

    if (write_open) close(to_child[1]);
    close(from_child[0]);

    if (timed_out) {
        kill(pid, SIGKILL);
        waitpid(pid, nullptr, 0);
        throw BackendError(BackendError::Kind::timeout,
                           "external backend: timed out after " +
                               std::to_string(config.timeout_seconds) +
                               "s: " + config.executable);
    }

    int status = 0;
    waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw BackendError(BackendError::Kind::exit_status,
                           "external backend exited with status " +
                               std::to_string(WIFEXITED(status)
                                                  ? WEXITSTATUS(status)
                                                  : -1) +
                               ": " + config.executable);
    return output;
}

ExternalMatting::ExternalMatting(ExternalBackendConfig config)
    : config_(std::move(config)) {}

AlphaMap ExternalMatting::matte(const RasterImage& image) {
    const uint32_t w = static_cast<uint32_t>(image.width());
    const uint32_t h = static_cast<uint32_t>(image.height());
    std::vector<uint8_t> request = ldbk::make_header(ldbk::kModeMatting, w, h);
    const auto rgba = rgba8_of(image);
    request.insert(request.end(), rgba.begin(), rgba.end());

    const auto response = run_subprocess(config_, request);
    const uint8_t mode = ldbk::parse_header(response, w, h);
    if (mode != ldbk::kModeMatting)
        throw BackendError(BackendError::Kind::malformed_output,
                           "external backend: response mode mismatch");
    const size_t expected = ldbk::kHeaderSize + static_cast<size_t>(w) * h;
    if (response.size() != expected)
        throw BackendError(BackendError::Kind::malformed_output,
                           "external backend: alpha payload size mismatch");

    AlphaMap alpha(image.width(), image.height());
    for (size_t i = 0; i < static_cast<size_t>(w) * h; ++i)
        alpha[i] = static_cast<float>(response[ldbk::kHeaderSize + i]) / 255.0f;
    return alpha;
}

ExternalInpainting::ExternalInpainting(ExternalBackendConfig config)
    : config_(std::move(config)) {}

RasterImage ExternalInpainting::inpaint(const RasterImage& image,
                                        const Mask& mask) {
    if (image.width() != mask.width() || image.height() != mask.height())
        throw std::invalid_argument("external inpaint: dimensions differ");
    const uint32_t w = static_cast<uint32_t>(image.width());
    const uint32_t h = static_cast<uint32_t>(image.height());
    std::vector<uint8_t> request =
        ldbk::make_header(ldbk::kModeInpainting, w, h);
    const auto rgba = rgba8_of(image);
    request.insert(request.end(), rgba.begin(), rgba.end());
    for (size_t i = 0; i < mask.data().size(); ++i)
        request.push_back(mask[i] ? 255 : 0);

    const auto response = run_subprocess(config_, request);
    const uint8_t mode = ldbk::parse_header(response, w, h);
    if (mode != ldbk::kModeInpainting)
        throw BackendError(BackendError::Kind::malformed_output,
                           "external backend: response mode mismatch");
    const size_t expected =
        ldbk::kHeaderSize + static_cast<size_t>(w) * h * 3;
    if (response.size() != expected)
        throw BackendError(BackendError::Kind::malformed_output,
                           "external backend: rgb payload size mismatch");

    // Unmasked pixels must pass through bit-exact, so only masked pixels are
    // taken from the 8-bit wire format.
    RasterImage out = image;
    for (size_t i = 0; i < static_cast<size_t>(w) * h; ++i) {
        if (!mask[i]) continue;
        for (int c = 0; c < 3; ++c)
            out.data()[i * 3 + c] =
                static_cast<float>(
                    response[ldbk::kHeaderSize + i * 3 + c]) /
                255.0f;
    }
    return out;
}

}  // namespace layerkit
