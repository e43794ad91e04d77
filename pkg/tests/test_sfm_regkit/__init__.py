import unittest

try:
    import sfm_regkit
except:
    raise Exception('Failed to import `sfm_regkit` utility module')


class PyTest(unittest.TestCase):
    """Make a basic py test class.

    The basic py test class will be used by the other tests.

    """

    SfmRegkitError = staticmethod(sfm_regkit.SfmRegkitError)
    FormatError = staticmethod(sfm_regkit.FormatError)
    GeometryError = staticmethod(sfm_regkit.GeometryError)
    SolverError = staticmethod(sfm_regkit.SolverError)
    sfm_regkit = staticmethod(sfm_regkit)
