import time

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Polygon as PolygonPatch

from .errors import ParameterError
from .geometry import rect_corners


class Analyser:
    """A class for the visual analysis of maps and trial results"""

    def __init__(self, layout=None):
        """Initialization

        :param layout: (obj: minicity.CityLayout)
            Optional city layout drawn under trial trajectories
        """
        self._layout = layout

    def plot_overlay(self, gt, est, show=False, save=True, filename=None, fmt='png'):
        """Map overlay plotting method: occupied cells of the ground truth in
        red, those of the estimate in black.

        :param gt: (obj: minicity.OccupancyGrid)
            The ground-truth map

        :param est: (obj: minicity.OccupancyGrid)
            The estimated map, in any frame

        :param show: (bool)
            A boolean that switches whether the plot is to be displayed.
            default: False.

        :param save: (bool)
            A boolean that switches whether the plot is to be saved.
            default: True.

        :param filename: (str)
            A string specifying the user given name for saving the file.
            If none provided a timestamp will be used as default.

        :param fmt: (str)
            A string specifying the format of the saved file.
            default: png

        :returns filename: (str or None)
        """
        figure, axes = self._create_figure()
        for grid, color, label, size in ((gt, 'red', 'ground truth', 6), (est, 'black', 'estimate', 2)):
            points = grid.occupied_points()
            if len(points):
                axes.scatter(points[:, 0], points[:, 1], s=size, c=color, marker='s', linewidths=0, label=label)
        axes.set_title('Occupied cells')
        axes.legend(loc='upper right')
        return self._finish(figure, 'overlay', show, save, filename, fmt)

    def plot_trial(self, result, cfg=None, show=False, save=True, filename=None, fmt='png'):
        """Trajectory plotting method for one trial.

        :param result: (obj: minicity.TrialResult)
            The trial to draw

        :param cfg: (obj: minicity.ScenarioConfig)
            Optional scenario, whose intersection polygon is drawn

        :returns filename: (str or None)
        """
        figure, axes = self._create_figure()
        layout = self._layout if self._layout is not None or cfg is None else cfg.layout
        if layout is not None:
            for building in layout.buildings:
                axes.add_patch(PolygonPatch(rect_corners(building.rect), closed=True, color='0.8'))
            axes.set_xlim(0.0, layout.bounds[0])
            axes.set_ylim(0.0, layout.bounds[1])
        if cfg is not None:
            verts = np.asarray(cfg.intersection.polygon().vertices)
            axes.add_patch(PolygonPatch(verts, closed=True, fill=False, edgecolor='blue', linestyle='--'))
        for vehicle_id, rows in sorted(result.trajectories.items()):
            if len(rows):
                axes.plot(rows[:, 1], rows[:, 2], label='vehicle {}'.format(vehicle_id))
        if result.crashed:
            last = [rows[-1] for rows in result.trajectories.values() if len(rows)]
            axes.scatter([r[1] for r in last], [r[2] for r in last], c='red', marker='x', s=60, label='crash')
        axes.set_title('Seed {}{}'.format(result.seed, ', crash at {:.2f} s'.format(result.crash_time)
                                          if result.crashed else ''))
        axes.legend(loc='upper right')
        return self._finish(figure, 'trial', show, save, filename, fmt)

    def _create_figure(self):
        """A method for creating a matplotlib figure with equal-aspect axes

        :returns (fig, ax): (obj, obj)
            A matplotlib.Figure and a matplotlib.Axes instance
        """
        fig = plt.figure()
        ax = fig.add_subplot(111)
        ax.set_aspect('equal')
        ax.set_xlabel('x [m]')
        ax.set_ylabel('y [m]')
        return fig, ax

    @staticmethod
    def _finish(figure, typ, show, save, filename, fmt):
        if not (show or save):
            raise ParameterError('nothing to do: neither show nor save was requested')
        if save:
            filename = filename or '{}_{}.{}'.format(typ, time.strftime('%Y%m%d'), fmt)
            figure.savefig(filename)
        if show:
            plt.show()
        plt.close(figure)
        return filename if save else None
