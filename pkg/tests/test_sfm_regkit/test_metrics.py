import math

import numpy as np

from tests.test_sfm_regkit import PyTest


def checkerboard(size):
    y, x = np.mgrid[:size, :size]
    return ((x + y) % 2).astype(np.float64)


def reference_ssim(a, b, window=8, stride=4):
    """Plain loop SSIM with uniform windows and L = 1."""
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    values = []
    for y in range(0, a.shape[0] - window + 1, stride):
        for x in range(0, a.shape[1] - window + 1, stride):
            pa = a[y:y + window, x:x + window].ravel()
            pb = b[y:y + window, x:x + window].ravel()
            ma, mb = pa.mean(), pb.mean()
            va = np.mean((pa - ma) ** 2)
            vb = np.mean((pb - mb) ** 2)
            cov = np.mean((pa - ma) * (pb - mb))
            values.append((2 * ma * mb + c1) * (2 * cov + c2) /
                          ((ma * ma + mb * mb + c1) * (va + vb + c2)))
    return float(np.mean(values))


class TestMetrics:
    """Test pairwise image weights."""

    def _image(self, pixels):
        return self.sfm_regkit.GrayImage(pixels)

    def test_gray_image(self):
        """Test gray image validation."""
        GrayImage = self.sfm_regkit.GrayImage
        image = GrayImage.from_values(3, 2, [0, 0.5, 1, 1, 0.5, 0])
        self.assertTrue(image.size == (3, 2))
        self.assertTrue(image.pixels[1, 0] == 1)

        self.assertRaises(self.SfmRegkitError, GrayImage.from_values,
                          3, 2, [0, 1])
        self.assertRaises(self.SfmRegkitError, GrayImage, [[0, 2]])
        self.assertRaises(self.SfmRegkitError, GrayImage, [[0, -0.1]])
        self.assertRaises(self.SfmRegkitError, GrayImage, [0, 1])

    def test_pixel_diff_weight(self):
        """Test the grayscale difference."""
        w = self.sfm_regkit.pixel_diff_weight
        black = self._image(np.zeros((256, 256)))
        white = self._image(np.ones((256, 256)))
        self.assertTrue(w(black, black) == 0.0)
        self.assertTrue(w(black, white) == 1.0)

        a = self._image(np.full((256, 256), 0.25))
        b = self._image(np.full((256, 256), 0.75))
        self.assertTrue(w(a, b) == 0.5)

        # sizes may differ
        small = self._image(np.full((30, 50), 0.25))
        self.assertTrue(math.isclose(w(small, b), 0.5, abs_tol=1e-12))

        empty = self._image(np.zeros((0, 4)))
        self.assertRaises(self.sfm_regkit.EmptyImage, w, empty, black)

    def test_resample(self):
        """Test resampling to the working size."""
        rng = np.random.default_rng(0)
        big = self._image(rng.random((600, 520)))
        out = self.sfm_regkit.resample(big)
        self.assertTrue(out.shape == (256, 256))
        self.assertTrue(out.min() >= 0 and out.max() <= 1)

        tiny = self._image([[0.0, 1.0], [1.0, 0.0]])
        out = self.sfm_regkit.resample(tiny, 64)
        self.assertTrue(out.shape == (64, 64))
        self.assertTrue(out[0, 0] == 0.0 and out[0, -1] == 1.0)

        same = self._image(rng.random((256, 256)))
        self.assertTrue(np.array_equal(self.sfm_regkit.resample(same),
                                       same.pixels))

    def test_ssim_weight(self):
        """Test the SSIM weight."""
        w = self.sfm_regkit.ssim_weight
        board = checkerboard(256)
        a = self._image(board)
        b = self._image(1 - board)
        self.assertTrue(w(a, a) == 0.0)
        self.assertTrue(w(a, b) > 1.0)
        self.assertTrue(w(a, b) <= 2.0)

        gray = self._image(np.full((256, 256), 0.5))
        self.assertTrue(w(gray, gray) == 0.0)

        self.assertRaises(self.sfm_regkit.ImageTooSmall, w, a, a, 4)

    def test_ssim_reference(self):
        """Test SSIM against a loop implementation."""
        rng = np.random.default_rng(1)
        for _ in range(5):
            a = rng.random((32, 40))
            b = np.clip(a + 0.2 * rng.standard_normal((32, 40)), 0, 1)
            self.assertTrue(math.isclose(self.sfm_regkit.ssim(a, b),
                                         reference_ssim(a, b),
                                         abs_tol=1e-12))
        board = checkerboard(32)
        self.assertTrue(math.isclose(self.sfm_regkit.ssim(board, 1 - board),
                                     reference_ssim(board, 1 - board),
                                     abs_tol=1e-12))

    def test_block_flow(self):
        """Test block matching."""
        rng = np.random.default_rng(2)
        a = rng.random((256, 256))

        flow = self.sfm_regkit.block_flow(a, a)
        self.assertTrue(flow.vectors.shape == (16, 16, 2))
        self.assertTrue(np.all(flow.vectors == 0))

        # rigid translation with wraparound
        b = np.roll(a, 4, axis=1)
        flow = self.sfm_regkit.block_flow(a, b)
        self.assertTrue(np.all(flow.vectors[..., 0] == 4))
        self.assertTrue(np.all(flow.vectors[..., 1] == 0))
        self.assertTrue(self.sfm_regkit.flow_std_weight(
            self._image(a), self._image(b)) <= 1e-9)

        # left half moves by 4 pixels, right half is static
        b = a.copy()
        b[:, :132] = np.roll(a, 4, axis=1)[:, :132]
        flow = self.sfm_regkit.block_flow(a, b)
        self.assertTrue(np.all(flow.magnitudes[:, :8] == 4))
        self.assertTrue(np.all(flow.magnitudes[:, 8:] == 0))
        self.assertTrue(self.sfm_regkit.flow_std_weight(
            self._image(a), self._image(b)) == 2.0)

        # partial blocks
        flow = self.sfm_regkit.block_flow(a[:20, :40], a[:20, :40])
        self.assertTrue(flow.vectors.shape == (2, 3, 2))

        self.assertRaises(self.sfm_regkit.ImageTooSmall,
                          self.sfm_regkit.block_flow,
                          np.zeros((8, 8)), np.zeros((8, 8)))

    def test_match_count_weight(self):
        """Test the match count weight."""
        w = self.sfm_regkit.match_count_weight
        self.assertTrue(w(4) == 0.25)
        self.assertTrue(w(1) == 1.0)
        self.assertTrue(w(0) == math.inf)
        self.assertRaises(self.SfmRegkitError, w, -1)

    def test_metric_axioms(self):
        """Test symmetry, self distance and ranges on random pairs."""
        rng = np.random.default_rng(3)
        pixel = self.sfm_regkit.pixel_diff_weight
        ssim_w = self.sfm_regkit.ssim_weight
        flow = self.sfm_regkit.flow_std_weight
        for _ in range(50):
            shape_a = tuple(rng.integers(40, 90, 2))
            shape_b = tuple(rng.integers(40, 90, 2))
            a = self._image(rng.random(shape_a))
            b = self._image(rng.random(shape_b))

            p = pixel(a, b, 64)
            self.assertTrue(0 <= p <= 1)
            self.assertTrue(abs(p - pixel(b, a, 64)) <= 1e-12)
            self.assertTrue(pixel(a, a, 64) == 0.0)

            s = ssim_w(a, b, 64)
            self.assertTrue(0 <= s <= 2)
            self.assertTrue(abs(s - ssim_w(b, a, 64)) <= 1e-12)
            self.assertTrue(ssim_w(a, a, 64) == 0.0)

            self.assertTrue(flow(a, a, 64) == 0.0)

    def test_distance_matrix(self):
        """Test distance matrix validation."""
        DistanceMatrix = self.sfm_regkit.DistanceMatrix
        d = DistanceMatrix(('a', 'b'), [[0, 1], [1, 0]])
        self.assertTrue(d.n == 2)
        DistanceMatrix(('a', 'b'), [[0, math.inf], [math.inf, 0]])

        self.assertRaises(self.SfmRegkitError, DistanceMatrix,
                          ('a', 'a'), [[0, 1], [1, 0]])
        self.assertRaises(self.SfmRegkitError, DistanceMatrix,
                          ('a', 'b'), [[0, 1], [2, 0]])
        self.assertRaises(self.SfmRegkitError, DistanceMatrix,
                          ('a', 'b'), [[1, 1], [1, 0]])
        self.assertRaises(self.SfmRegkitError, DistanceMatrix,
                          ('a', 'b'), [[0, -1], [-1, 0]])
        self.assertRaises(self.SfmRegkitError, DistanceMatrix,
                          ('a', 'b'), [[0, np.nan], [np.nan, 0]])
        self.assertRaises(self.SfmRegkitError, DistanceMatrix,
                          ('a', 'b', 'c'), [[0, 1], [1, 0]])

    def test_build_distance_matrix(self):
        """Test building matrices."""
        build = self.sfm_regkit.build_distance_matrix
        rng = np.random.default_rng(4)
        a = self._image(rng.random((64, 64)))

        d = build([('a', a)], 'pixel')
        self.assertTrue(d.labels == ('a',))
        self.assertTrue(np.array_equal(d.weights, [[0.0]]))

        d = build({'a': a, 'b': a, 'c': a}, 'pixel', size=32)
        self.assertTrue(np.array_equal(d.weights, np.zeros((3, 3))))

        images = [(str(k), self._image(rng.random((48, 48))))
                  for k in range(4)]
        for metric in ('pixel', 'ssim', 'flow'):
            d = build(images, metric, size=32)
            self.assertTrue(np.array_equal(d.weights, d.weights.T))
            self.assertTrue(np.all(np.diag(d.weights) == 0))
            threaded = build(images, metric, size=32, workers=3)
            self.assertTrue(d == threaded)

        table = self.sfm_regkit.MatchTable(
            {('0', '1'): 10, ('0', '2'): 5, ('1', '3'): 4})
        d = build(table, 'matches')
        self.assertTrue(d.labels == ('0', '1', '2', '3'))
        self.assertTrue(d.weights[0, 1] == 0.1)
        self.assertTrue(d.weights[2, 0] == 0.2)
        self.assertTrue(d.weights[3, 1] == 0.25)
        self.assertTrue(d.weights[2, 3] == math.inf)

        self.assertRaises(self.SfmRegkitError, build, table, 'pixel')
        self.assertRaises(self.SfmRegkitError, build, images, 'matches')
        self.assertRaises(self.SfmRegkitError, build, images, 'color')
        self.assertRaises(self.sfm_regkit.TooFewImages, build, [], 'pixel')

    def test_build_distance_matrix_errors(self):
        """Test errors carry the failing pair or image."""
        build = self.sfm_regkit.build_distance_matrix
        a = self._image(np.zeros((16, 16)))
        with self.assertRaises(self.sfm_regkit.ImageTooSmall) as cm:
            build([('a', a), ('b', a)], 'ssim', size=4)
        self.assertTrue(cm.exception.pair == ('a', 'b'))

        empty = self._image(np.zeros((0, 3)))
        with self.assertRaises(self.sfm_regkit.EmptyImage) as cm:
            build([('a', a), ('e', empty)], 'pixel')
        self.assertTrue(cm.exception.image_id == 'e')

    def test_classify_transparency(self):
        """Test the transparency rule."""
        build = self.sfm_regkit.build_distance_matrix
        classify = self.sfm_regkit.classify_transparency
        gray = self._image(np.full((32, 32), 0.5))
        d = build([(str(k), gray) for k in range(3)], 'pixel', size=32)
        self.assertTrue(classify(d, 0.1))

        black = self._image(np.zeros((32, 32)))
        white = self._image(np.ones((32, 32)))
        d = build([('0', black), ('1', white), ('2', black), ('3', white)],
                  'pixel', size=32)
        self.assertFalse(classify(d, 0.1))

        d = self.sfm_regkit.DistanceMatrix(('a', 'b'), [[0, 0.5], [0.5, 0]])
        self.assertFalse(classify(d, 0.5))
        self.assertTrue(classify(d, 0.6))

        d = self.sfm_regkit.DistanceMatrix(('a',), [[0]])
        self.assertRaises(self.sfm_regkit.TooFewImages, classify, d, 0.1)

    def test_shared_dimensions(self):
        """Test the shared size check."""
        shared = self.sfm_regkit.shared_dimensions
        self.assertTrue(shared([(1024, 1024)] * 3))
        self.assertFalse(shared([(1024, 1024), (1024, 768), (1024, 1024)]))
        self.assertTrue(shared([(640, 480)]))
        image = self._image(np.zeros((4, 6)))
        self.assertTrue(shared([image, (6, 4)]))


class TestPyTestMetrics(TestMetrics, PyTest):
    pass
