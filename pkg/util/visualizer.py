import os
import time

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from tensorboardX import SummaryWriter

from . import util, html


LOSS_COLUMNS = ['epoch', 'train_loss', 'val_loss', 'best']

plt.rcParams['svg.hashsalt'] = 'audio-captioning'
plt.rcParams['svg.fonttype'] = 'path'


def save_svg(fig, path):
    """Write <fig> as an SVG whose bytes depend only on its content."""
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)


def save_boxplot(path, labels, data, title, ylabel='CIDEr-D'):
    """One box per entry of <data>; each box carries the SVG id 'box_<i>'."""
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(labels) + 2.0), 4.5))
    parts = ax.boxplot(data, showmeans=True)
    for i, box in enumerate(parts['boxes']):
        box.set_gid('box_%d' % i)
    ax.set_xticks(range(1, len(labels) + 1))
    ax.set_xticklabels(labels, rotation=90, fontsize=7)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    save_svg(fig, path)
    return len(parts['boxes'])


def save_overview(path, summary: pd.DataFrame):
    """Mean score per encoder (rows) x adapter (columns), averaged over the remaining factors."""
    from metrics.stats import setting_columns

    frame = pd.concat([summary.reset_index(drop=True), setting_columns(summary['setting_id'])], axis=1)
    pivot = frame.pivot_table(index='encoder', columns='adapter', values='mean', aggfunc='mean').sort_index()
    fig, ax = plt.subplots(figsize=(5, 4))
    image = ax.imshow(pivot.to_numpy(), cmap='viridis', aspect='auto')
    ax.set_xticks(range(len(pivot.columns)))
    ax.set_xticklabels(list(pivot.columns))
    ax.set_yticks(range(len(pivot.index)))
    ax.set_yticklabels(list(pivot.index))
    for (i, j), value in np.ndenumerate(pivot.to_numpy()):
        if not np.isnan(value):
            ax.text(j, i, '%.3f' % value, ha='center', va='center', color='w', fontsize=8)
    fig.colorbar(image, ax=ax, label='mean CIDEr-D')
    ax.set_title('encoder x adapter')
    fig.tight_layout()
    save_svg(fig, path)


def write_csv(frame: pd.DataFrame, path):
    frame.to_csv(path, index=False, float_format='%.10g', lineterminator='\n')


def write_index(out_dir, title, summary: pd.DataFrame, figures, tables):
    """index.html linking every report table and figure."""
    webpage = html.HTML(out_dir, title)
    webpage.add_header(title)
    webpage.add_links([(name, name) for name in tables])
    webpage.add_header('summary')
    webpage.add_table(summary)
    for i in range(0, len(figures), 3):
        row = figures[i:i + 3]
        webpage.add_images(row, [name[:-4] for name in row])
    return webpage.save()


class Visualizer():
    """This class prints and saves the per-epoch logging information of one training run.

    <out_dir>/loss_log.txt collects human-readable epoch lines under a timestamped header;
    <out_dir>/loss_log.csv holds one row per epoch (epoch, train_loss, val_loss, best);
    the same scalars go to a tensorboard event file under <out_dir>/tensorboard.
    """

    def __init__(self, out_dir, name='', verbose=True):
        """Initialize the Visualizer class

        Parameters:
            out_dir (str)  -- run directory; created if missing
            name (str)     -- run name shown in the log header
            verbose (bool) -- print epoch lines to the console
        """
        self.name = name
        self.verbose = verbose
        util.mkdirs(out_dir)
        self.log_name = os.path.join(out_dir, 'loss_log.txt')
        self.log_name_csv = os.path.join(out_dir, 'loss_log.csv')
        self.plot_name = os.path.join(out_dir, 'loss_curve.svg')
        self.rows = []
        with open(self.log_name, "a") as log_file:
            now = time.strftime("%c")
            log_file.write('================ Training Loss %s(%s) ================\n' % (name + ' ' if name else '', now))
        self.writer_dir = os.path.join(out_dir, 'tensorboard')
        util.mkdirs(self.writer_dir)
        self.writer = SummaryWriter(self.writer_dir)

    def print_current_losses(self, epoch, max_epochs, losses, t_comp):
        """print current losses on console; also save them to the text log

        Parameters:
            epoch (int)          -- current epoch
            max_epochs (int)     -- epoch cap of the run
            losses (OrderedDict) -- losses stored in the format of (name, float) pairs
            t_comp (float)       -- seconds spent in the epoch
        """
        message = '(epoch: %d / %d, time: %.3f) ' % (epoch, max_epochs, t_comp)
        for k, v in losses.items():
            message += '%s: %.6f ' % (k, v)
        if self.verbose:
            print(message)
        with open(self.log_name, "a") as log_file:
            log_file.write('%s\n' % message)

    def save_epoch(self, epoch, train_loss, val_loss, best):
        """Append one epoch to loss_log.csv and to the tensorboard writer"""
        self.rows.append((epoch, float(train_loss), float(val_loss), int(best)))
        write_csv(pd.DataFrame(self.rows, columns=LOSS_COLUMNS), self.log_name_csv)
        for k, v in (('train_loss', train_loss), ('val_loss', val_loss)):
            self.writer.add_scalar(k, float(v), epoch)

    def close(self):
        self.writer.close()

    def plot_losses(self):
        """Train and validation loss curves of the epochs logged so far"""
        if not self.rows:
            return None
        epochs, train, val, best = zip(*self.rows)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(epochs, train, label='train')
        ax.plot(epochs, val, label='validation')
        best_epochs = [e for e, b in zip(epochs, best) if b]
        ax.axvline(best_epochs[-1] if best_epochs else epochs[0], color='k', linestyle=':', linewidth=1)
        ax.set_xlabel('epoch')
        ax.set_ylabel('cross-entropy')
        ax.set_title(self.name + ' loss over time')
        ax.legend()
        fig.tight_layout()
        save_svg(fig, self.plot_name)
        return self.plot_name
