import os

import dominate
from dominate.tags import h3, table, tr, td, th, p, a, img, br


class HTML:
    """This HTML class collects report figures, tables and links into a single HTML file.

     It consists of functions such as <add_header> (add a text header), <add_images> (add a row of
     figures), <add_table> (add a data table), <add_links> and <save> (write <web_dir>/index.html).
     It is based on Python library 'dominate', a Python library for creating and manipulating HTML documents using a DOM API.
    """

    def __init__(self, web_dir, title, img_subdir='figures'):
        """Initialize the HTML classes

        Parameters:
            web_dir (str)    -- a directory that stores the webpage; the file is <web_dir>/index.html
            title (str)      -- the webpage name
            img_subdir (str) -- figures are referenced relative to <web_dir>/<img_subdir>
        """
        self.title = title
        self.web_dir = web_dir
        self.img_subdir = img_subdir
        self.img_dir = os.path.join(self.web_dir, img_subdir)
        os.makedirs(self.img_dir, exist_ok=True)

        self.doc = dominate.document(title=title)

    def add_header(self, text):
        with self.doc:
            h3(text)

    def add_images(self, ims, txts, width=480):
        """add a row of figures; <ims> are file names inside the figure directory"""
        t = table(border=1, style="table-layout: fixed;")
        self.doc.add(t)
        with t:
            with tr():
                for im, txt in zip(ims, txts):
                    with td(style="word-wrap: break-word;", halign="center", valign="top"):
                        with p():
                            with a(href='%s/%s' % (self.img_subdir, im)):
                                img(style="width:%dpx" % width, src='%s/%s' % (self.img_subdir, im))
                            br()
                            p(txt)

    def add_table(self, frame, float_format='%.4f'):
        """add a pandas DataFrame as a plain table"""
        t = table(border=1)
        self.doc.add(t)
        with t:
            with tr():
                for column in frame.columns:
                    th(str(column))
            for row in frame.itertuples(index=False):
                with tr():
                    for value in row:
                        td(float_format % value if isinstance(value, float) else str(value))

    def add_links(self, links):
        """links: (text, relative href) pairs"""
        with self.doc:
            with p():
                for text, href in links:
                    a(text, href=href)
                    br()

    def save(self):
        """save the current content to the HTML file"""
        html_file = os.path.join(self.web_dir, 'index.html')
        with open(html_file, 'wt', encoding='utf-8') as f:
            f.write(self.doc.render())
        return html_file
