import numpy as np
from scipy.spatial.transform import Rotation

from tests.test_sfm_regkit import PyTest

RZ90 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


def random_similarity(rng):
    """Random scale in [0.1, 10], rotation and translation."""
    scale = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
    rotation = Rotation.random(random_state=rng).as_matrix()
    translation = rng.uniform(-10, 10, 3)
    return scale, rotation, translation


class TestHorn:
    """Test the similarity fit."""

    def test_apply(self):
        """Test applying a transform."""
        T = self.sfm_regkit.SimilarityTransform
        apply = self.sfm_regkit.apply

        p = apply(T(1, np.eye(3), [0, 0, 0]), [5, 6, 7])
        self.assertTrue(np.array_equal(p, [5, 6, 7]))

        p = apply(T(2, np.eye(3), [0, 0, 0]), [1, 1, 1])
        self.assertTrue(np.array_equal(p, [2, 2, 2]))

        p = apply(T(1, RZ90, [1, 0, 0]), [1, 0, 0])
        self.assertTrue(np.allclose(p, [1, 1, 0], atol=1e-15))

        points = apply(T(1, RZ90, [1, 0, 0]), np.eye(3))
        self.assertTrue(points.shape == (3, 3))

    def test_transform_invalid(self):
        """Test transform validation."""
        T = self.sfm_regkit.SimilarityTransform
        self.assertRaises(self.SfmRegkitError, T, 0, np.eye(3), [0, 0, 0])
        self.assertRaises(self.SfmRegkitError, T, -1, np.eye(3), [0, 0, 0])
        self.assertRaises(self.SfmRegkitError, T, np.inf, np.eye(3),
                          [0, 0, 0])
        self.assertRaises(self.SfmRegkitError, T, 1,
                          np.diag([1.0, 1.0, -1.0]), [0, 0, 0])

    def test_fit_identity(self):
        """Test recovering the identity."""
        C = self.sfm_regkit.Correspondences
        points = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0.3, 0.2, 1]])
        t = self.sfm_regkit.fit_similarity(C(points, points))
        self.assertTrue(abs(t.scale - 1) <= 1e-9)
        self.assertTrue(np.allclose(t.rotation, np.eye(3), atol=1e-9))
        self.assertTrue(np.allclose(t.translation, 0, atol=1e-9))

    def test_fit_known(self):
        """Test recovering a known transform."""
        C = self.sfm_regkit.Correspondences
        source = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
        target = 2 * source @ RZ90.T + [1, 0, 0]
        c = C(source, target)
        t = self.sfm_regkit.fit_similarity(c)
        self.assertTrue(abs(t.scale - 2) <= 1e-9)
        self.assertTrue(np.allclose(t.rotation, RZ90, atol=1e-9))
        self.assertTrue(np.allclose(t.translation, [1, 0, 0], atol=1e-9))
        self.assertTrue(np.all(self.sfm_regkit.residuals(t, c) <= 1e-9))

    def test_fit_exact_recovery(self):
        """Test exact recovery on random noiseless sets."""
        C = self.sfm_regkit.Correspondences
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            scale, rotation, translation = random_similarity(rng)
            k = int(rng.integers(3, 21))
            source = rng.standard_normal((k, 3))
            target = scale * source @ rotation.T + translation
            c = C(source, target)
            t = self.sfm_regkit.fit_similarity(c)
            self.assertTrue(abs(t.scale - scale) <= 1e-7 * scale)
            self.assertTrue(np.allclose(t.rotation, rotation, atol=1e-7))
            self.assertTrue(np.allclose(t.translation, translation,
                                        atol=1e-7 * (1 + scale)))
            r = self.sfm_regkit.residuals(t, c)
            self.assertTrue(np.sqrt(np.mean(r ** 2)) <= 1e-9 * (1 + scale))

    def test_fit_degenerate(self):
        """Test degenerate configurations."""
        C = self.sfm_regkit.Correspondences
        fit = self.sfm_regkit.fit_similarity
        Degenerate = self.sfm_regkit.DegenerateConfiguration

        line = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]])
        self.assertRaises(Degenerate, fit, C(line, line))

        same = np.ones((4, 3))
        self.assertRaises(Degenerate, fit, C(same, same + 1))

        two = np.array([[0.0, 0, 0], [1, 0, 0]])
        self.assertRaises(Degenerate, fit, C(two, two))

        with self.assertLogs('sfm_regkit.horn', level='DEBUG') as logs:
            self.assertRaises(Degenerate, fit, C(line, line))
        self.assertTrue(any('degenerate' in out for out in logs.output))

        # coincident target
        points = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
        self.assertRaises(Degenerate, fit, C(points, np.zeros((3, 3))))

        self.assertRaises(self.SfmRegkitError, C, points, points[:2])
        bad = points.copy()
        bad[0, 0] = np.nan
        self.assertRaises(self.SfmRegkitError, C, bad, points)

    def test_fit_reflection(self):
        """Test mirrored targets still give a proper rotation."""
        C = self.sfm_regkit.Correspondences
        rng = np.random.default_rng(5)
        for _ in range(20):
            source = rng.standard_normal((6, 3))
            target = source * [1, 1, -1]
            t = self.sfm_regkit.fit_similarity(C(source, target))
            self.assertTrue(abs(np.linalg.det(t.rotation) - 1) <= 1e-9)
            r = self.sfm_regkit.residuals(t, C(source, target))
            self.assertTrue(np.max(r) > 1e-6)

    def test_residuals(self):
        """Test residuals."""
        C = self.sfm_regkit.Correspondences
        r = self.sfm_regkit.residuals(self.sfm_regkit.IDENTITY,
                                      C([[0, 0, 0]], [[3, 4, 0]]))
        self.assertTrue(np.array_equal(r, [5.0]))

        points = np.array([[0.0, 0, 0], [1, 2, 3], [-4, 5, 6]])
        r = self.sfm_regkit.residuals(self.sfm_regkit.IDENTITY,
                                      C(points, points))
        self.assertTrue(np.array_equal(r, np.zeros(3)))
        self.assertTrue(np.array_equal(
            self.sfm_regkit.apply(self.sfm_regkit.IDENTITY, points), points))

    def test_residual_invariance(self):
        """Test invariance under a common rigid motion and permutation."""
        C = self.sfm_regkit.Correspondences
        rng = np.random.default_rng(9)
        source = rng.standard_normal((8, 3))
        target = source + 0.1 * rng.standard_normal((8, 3))
        c = C(source, target)
        base = self.sfm_regkit.residuals(self.sfm_regkit.fit_similarity(c), c)

        rotation = Rotation.random(random_state=rng).as_matrix()
        moved = C(source @ rotation.T + 3, target @ rotation.T + 3)
        again = self.sfm_regkit.residuals(
            self.sfm_regkit.fit_similarity(moved), moved)
        self.assertTrue(np.allclose(base, again, atol=1e-9))

        perm = rng.permutation(8)
        shuffled = C(source[perm], target[perm])
        r = self.sfm_regkit.residuals(
            self.sfm_regkit.fit_similarity(shuffled), shuffled)
        self.assertTrue(np.allclose(np.sort(r), np.sort(base), atol=1e-9))

    def test_fit_batch(self):
        """Test the batched fit flags degenerate sets."""
        rng = np.random.default_rng(3)
        source = rng.standard_normal((5, 4, 3))
        source[2] = [[0, 0, 0], [1, 1, 1], [2, 2, 2], [3, 3, 3]]
        scale, rotation, translation = random_similarity(rng)
        target = scale * source @ rotation.T + translation
        scales, rotations, translations, degenerate = \
            self.sfm_regkit.fit_similarity_batch(source, target)
        self.assertTrue(degenerate.tolist() ==
                        [False, False, True, False, False])
        for b in (0, 1, 3, 4):
            self.assertTrue(abs(scales[b] - scale) <= 1e-7 * scale)
            self.assertTrue(np.allclose(rotations[b], rotation, atol=1e-7))

    def test_transform_pose(self):
        """Test moving a camera between frames."""
        rng = np.random.default_rng(11)
        scale, rotation, translation = random_similarity(rng)
        t = self.sfm_regkit.SimilarityTransform(scale, rotation, translation)
        scene = self.sfm_regkit.synthesize_scene(5, layout='random', seed=4)
        for image_id in scene.ids:
            pose = scene.pose(image_id)
            moved = self.sfm_regkit.transform_pose(t, pose)
            c = self.sfm_regkit.camera_center(pose)
            self.assertTrue(np.allclose(
                self.sfm_regkit.camera_center(moved),
                self.sfm_regkit.apply(t, c), atol=1e-9))
            self.assertTrue(self.sfm_regkit.validate_rotation(
                moved.rotation))
            # directions seen by the camera are unchanged
            d = rng.standard_normal(3)
            self.assertTrue(np.allclose(pose.rotation @ d,
                                        moved.rotation @ (rotation @ d),
                                        atol=1e-12))


class TestPyTestHorn(TestHorn, PyTest):
    pass
